import init, { card_preview, compare_images, baseline_curves } from "./pkg/cardforge_demo.js";

const $ = (id) => document.getElementById(id);

function text(tag, value, cls) {
  const el = document.createElement(tag);
  el.textContent = value ?? "";
  if (cls) el.className = cls;
  return el;
}

function showError(target, e) {
  target.replaceChildren(text("p", String(e.message ?? e), "err"));
}

function preview() {
  const out = $("cards");
  try {
    const r = JSON.parse(card_preview($("html").value, $("base").value));
    out.replaceChildren(...r.cards.map((c) => {
      const div = document.createElement("div");
      div.className = "card";
      div.append(
        text("div", `${c.card.platform}: ${c.capability}`, "muted"),
        text("h3", c.card.title ?? "(no title)"),
        text("div", c.card.description ?? "(no description)"),
        text("div", `image: ${c.card.image ?? "none"}`, "muted"),
        text("div", `title from: ${c.card.title_source}`, "muted"),
      );
      if (c.description_divergence) div.append(text("div", "description differs from the page's", "muted"));
      return div;
    }));
    $("candidates").textContent = `${r.meta_fields} meta fields; candidate images: ${r.candidates.join(", ") || "none"}`;
  } catch (e) {
    showError(out, e);
  }
}

async function bytes(input) {
  const f = input.files[0];
  if (!f) throw new Error("choose both images");
  return new Uint8Array(await f.arrayBuffer());
}

async function compare() {
  const out = $("comparison");
  try {
    const r = JSON.parse(compare_images(await bytes($("imgA")), await bytes($("imgB"))));
    const table = document.createElement("table");
    const row = (cells, tag = "td") => {
      const tr = document.createElement("tr");
      tr.append(...cells.map((c) => text(tag, c)));
      table.append(tr);
    };
    row(["", "A", "B"], "th");
    row(["phash", r.a.phash, r.b.phash]);
    for (const k of Object.keys(r.a.features)) row([k, r.a.features[k], r.b.features[k]]);
    out.replaceChildren(table, text("p", `hash distance ${r.distance.toFixed(4)} (${r.hamming} of 64 bits)`));
  } catch (e) {
    showError(out, e);
  }
}

const SVG = "http://www.w3.org/2000/svg";
const COLORS = { random: "#888", last_figure: "#c33" };

function svg(tag, attrs) {
  const el = document.createElementNS(SVG, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

function plot() {
  for (const id of ["docs", "rate", "trials"]) $(id + "V").textContent = $(id).value;
  const area = $("plot");
  const [w, h, pad] = [560, 320, 36];
  const x = (t) => pad + t * (w - 2 * pad);
  const y = (v) => h - pad - v * (h - 2 * pad);
  let r;
  try {
    r = JSON.parse(baseline_curves(+$("docs").value, +$("rate").value, +$("trials").value, +$("seed").value));
  } catch (e) {
    area.replaceChildren(svg("text", { x: pad, y: pad }));
    area.firstChild.textContent = String(e.message ?? e);
    return;
  }
  const parts = [
    svg("line", { x1: x(0), y1: y(0), x2: x(1), y2: y(0), stroke: "#333" }),
    svg("line", { x1: x(0), y1: y(0), x2: x(0), y2: y(1), stroke: "#333" }),
  ];
  for (const v of [0, 0.5, 1]) {
    const label = svg("text", { x: 4, y: y(v) + 4, "font-size": 11 });
    label.textContent = v;
    parts.push(label);
  }
  r.curves.forEach((c, i) => {
    const color = COLORS[c.approach_name] ?? "#36c";
    for (const [key, dash] of [["mrr", ""], ["p_at_1", "5,4"]]) {
      const pts = c.points.map((p) => `${x(p.threshold)},${y(p[key])}`).join(" ");
      parts.push(svg("polyline", { points: pts, fill: "none", stroke: color, "stroke-width": 2, "stroke-dasharray": dash }));
    }
    const label = svg("text", { x: x(0.55), y: y(0.3) - 16 * i, fill: color, "font-size": 12 });
    label.textContent = `${c.approach_name}: P@1 at 0 = ${c.points[0].p_at_1.toFixed(3)}`;
    parts.push(label);
  });
  area.replaceChildren(...parts);
}

await init();
$("preview").addEventListener("click", preview);
$("compare").addEventListener("click", compare);
for (const id of ["docs", "rate", "trials", "seed"]) $(id).addEventListener("input", plot);
preview();
plot();
