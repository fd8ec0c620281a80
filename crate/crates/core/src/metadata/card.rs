use serde::{Deserialize, Serialize};

use super::{first_value, MetaField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Twitter,
    Facebook,
}

impl Platform {
    pub const ALL: [Platform; 2] = [Platform::Twitter, Platform::Facebook];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Twitter => "twitter",
            Platform::Facebook => "facebook",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleSource {
    MetaField,
    HtmlTitleElement,
    None,
}

/// Resolved values of the social card units for one platform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardFields {
    pub platform: Platform,
    pub title: Option<String>,
    pub description: Option<String>,
    pub image: Option<String>,
    pub url: Option<String>,
    pub type_or_card: Option<String>,
    pub title_source: TitleSource,
}

fn owned(v: Option<&str>) -> Option<String> {
    v.map(str::to_string)
}

/// Resolves card units from META fields. Twitter units fall back to their
/// `og:*` counterparts (except `twitter:card`); Facebook's title falls back
/// to the HTML `title` element. The first non-empty occurrence of a key wins.
pub fn resolve_card(fields: &[MetaField], html_title: Option<&str>, platform: Platform) -> CardFields {
    let get = |k: &str| first_value(fields, k);
    match platform {
        Platform::Twitter => {
            let title = get("twitter:title").or_else(|| get("og:title"));
            CardFields {
                platform,
                title_source: if title.is_some() { TitleSource::MetaField } else { TitleSource::None },
                title: owned(title),
                description: owned(get("twitter:description").or_else(|| get("og:description"))),
                image: owned(
                    get("twitter:image")
                        .or_else(|| get("twitter:image:url"))
                        .or_else(|| get("og:image")),
                ),
                url: owned(get("og:url")),
                type_or_card: owned(get("twitter:card")),
            }
        }
        Platform::Facebook => {
            let html_title = html_title.map(str::trim).filter(|t| !t.is_empty());
            let (title, title_source) = match (get("og:title"), html_title) {
                (Some(t), _) => (Some(t), TitleSource::MetaField),
                (None, Some(t)) => (Some(t), TitleSource::HtmlTitleElement),
                (None, None) => (None, TitleSource::None),
            };
            CardFields {
                platform,
                title: owned(title),
                description: owned(get("og:description")),
                image: owned(get("og:image")),
                url: owned(get("og:url")),
                type_or_card: owned(get("og:type")),
                title_source,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityLevel {
    None,
    TitleOnly,
    TitleFromMetadata,
    TitleAndDescription,
    Full,
}

impl CapabilityLevel {
    /// The cumulative rows of a capability table, weakest first.
    pub const ROWS: [CapabilityLevel; 4] = [
        CapabilityLevel::TitleOnly,
        CapabilityLevel::TitleFromMetadata,
        CapabilityLevel::TitleAndDescription,
        CapabilityLevel::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CapabilityLevel::None => "none",
            CapabilityLevel::TitleOnly => "title_only",
            CapabilityLevel::TitleFromMetadata => "title_from_metadata",
            CapabilityLevel::TitleAndDescription => "title_and_description",
            CapabilityLevel::Full => "full",
        }
    }

    /// Whether a document at this level counts toward table row `row`.
    /// Twitter titles always come from metadata, so for Twitter the
    /// `title_from_metadata` row coincides with `title_only`.
    pub fn meets(self, row: CapabilityLevel, platform: Platform) -> bool {
        match (platform, row) {
            (Platform::Twitter, CapabilityLevel::TitleFromMetadata) => self >= CapabilityLevel::TitleOnly,
            _ => self >= row,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardCapability {
    pub level: CapabilityLevel,
    /// Facebook only: the level includes a description but `og:image` is
    /// absent. The OGP standard allows this card; Facebook has been observed
    /// to show only the title in that configuration.
    pub observed_description_divergence: bool,
}

/// Highest card level the platform can render from the given fields.
pub fn card_capability(card: &CardFields, fields: &[MetaField], platform: Platform) -> CardCapability {
    let has = |k: &str| first_value(fields, k).is_some();
    let level = match platform {
        Platform::Twitter => {
            if !(has("twitter:card") && card.title.is_some()) {
                CapabilityLevel::None
            } else if card.description.is_none() {
                CapabilityLevel::TitleOnly
            } else if card.image.is_none() {
                CapabilityLevel::TitleAndDescription
            } else {
                CapabilityLevel::Full
            }
        }
        Platform::Facebook => {
            if card.title.is_none() {
                CapabilityLevel::None
            } else if !has("og:title") {
                CapabilityLevel::TitleOnly
            } else if !has("og:description") {
                CapabilityLevel::TitleFromMetadata
            } else if !has("og:image") {
                CapabilityLevel::TitleAndDescription
            } else {
                CapabilityLevel::Full
            }
        }
    };
    CardCapability {
        level,
        observed_description_divergence: platform == Platform::Facebook && level == CapabilityLevel::TitleAndDescription,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(pairs: &[(&str, &str)]) -> Vec<MetaField> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, (k, v))| MetaField {
                key: k.to_string(),
                value: v.to_string(),
                position: i + 1,
            })
            .collect()
    }

    fn level(f: &[MetaField], title: Option<&str>, p: Platform) -> CapabilityLevel {
        card_capability(&resolve_card(f, title, p), f, p).level
    }

    #[test]
    fn twitter_falls_back_to_og_image() {
        let f = fields(&[("og:image", "U")]);
        assert_eq!(resolve_card(&f, None, Platform::Twitter).image.as_deref(), Some("U"));
    }

    #[test]
    fn facebook_title_from_html() {
        let c = resolve_card(&[], Some("T"), Platform::Facebook);
        assert_eq!(c.title.as_deref(), Some("T"));
        assert_eq!(c.title_source, TitleSource::HtmlTitleElement);
    }

    #[test]
    fn direct_twitter_key_beats_fallback() {
        let f = fields(&[("twitter:image", "A"), ("og:image", "B")]);
        assert_eq!(resolve_card(&f, None, Platform::Twitter).image.as_deref(), Some("A"));
        let f = fields(&[("og:image", "B"), ("twitter:image:url", "C")]);
        assert_eq!(resolve_card(&f, None, Platform::Twitter).image.as_deref(), Some("C"));
    }

    #[test]
    fn og_only_document_levels() {
        let f = fields(&[("og:title", "t"), ("og:description", "d"), ("og:image", "i")]);
        assert_eq!(level(&f, None, Platform::Facebook), CapabilityLevel::Full);
        assert_eq!(level(&f, None, Platform::Twitter), CapabilityLevel::None);
    }

    #[test]
    fn html_title_only() {
        assert_eq!(level(&[], Some("T"), Platform::Facebook), CapabilityLevel::TitleOnly);
        assert_eq!(level(&[], None, Platform::Facebook), CapabilityLevel::None);
        assert_eq!(level(&[], Some("T"), Platform::Twitter), CapabilityLevel::None);
    }

    #[test]
    fn twitter_card_with_og_title() {
        let f = fields(&[("twitter:card", "summary"), ("og:title", "t")]);
        assert_eq!(level(&f, None, Platform::Twitter), CapabilityLevel::TitleOnly);
    }

    #[test]
    fn facebook_description_without_image_is_flagged() {
        let f = fields(&[("og:title", "t"), ("og:description", "d")]);
        let cap = card_capability(&resolve_card(&f, None, Platform::Facebook), &f, Platform::Facebook);
        assert_eq!(cap.level, CapabilityLevel::TitleAndDescription);
        assert!(cap.observed_description_divergence);
    }

    #[test]
    fn twitter_row_coincidence() {
        assert!(CapabilityLevel::TitleOnly.meets(CapabilityLevel::TitleFromMetadata, Platform::Twitter));
        assert!(!CapabilityLevel::TitleOnly.meets(CapabilityLevel::TitleFromMetadata, Platform::Facebook));
    }
}
