import init, { cells, generate, links, edit, exportDeck } from "./pkg/nbdeck_demo_wasm.js";

const $ = (id) => document.getElementById(id);
const state = { notebook: null, deck: null, selected: null };

function status(text, isError = false) {
  $("status").textContent = text;
  $("status").className = isError ? "error" : "";
}

function attempt(fn) {
  try {
    return fn();
  } catch (e) {
    status(String(e.message ?? e), true);
    return undefined;
  }
}

function setNotebook(text) {
  const list = attempt(() => JSON.parse(cells(text)));
  if (!list) return;
  state.notebook = text;
  $("cells").replaceChildren(...list.map((c) => {
    const div = document.createElement("div");
    div.className = `cell ${c.kind}`;
    div.id = `cell-${c.index}`;
    const pre = document.createElement("pre");
    pre.textContent = c.source || "(empty)";
    const tag = document.createElement("span");
    tag.className = "tag";
    tag.textContent = `[${c.index}] ${c.kind}${c.outputs.length ? " · " + c.outputs.join(", ") : ""}`;
    div.append(tag, pre);
    return div;
  }));
  $("generate").disabled = false;
  status(`${list.length} cells`);
}

function runGenerate() {
  const options = JSON.stringify({
    title: $("title").value,
    audience: $("audience").value,
    detail: Number($("detail").value),
  });
  const deck = attempt(() => generate(state.notebook, options));
  if (!deck) return;
  state.deck = deck;
  for (const id of ["save", "export-md", "export-html", "export-json"]) $(id).disabled = false;
  renderOutline();
  const parsed = JSON.parse(deck);
  select(parsed.slides[1]?.id ?? parsed.slides[0].id);
  const empty = parsed.slides.filter((s) => s.empty_auto).length;
  status(`${parsed.slides.length} slides, ${empty} without matching cells`);
}

function renderOutline() {
  const deck = JSON.parse(state.deck);
  const items = [];
  let group = null;
  for (const s of deck.slides) {
    if (s.group && s.group !== group) {
      group = s.group;
      const g = document.createElement("li");
      g.className = "group";
      g.textContent = group;
      items.push(g);
    }
    const li = document.createElement("li");
    li.className = `slide${s.empty_auto ? " empty" : ""}${s.example_prompt ? " prompt" : ""}${s.id === state.selected ? " active" : ""}`;
    li.textContent = s.title || s.id;
    li.onclick = () => select(s.id);
    items.push(li);
  }
  $("outline").replaceChildren(...items);
}

function highlight(slideId) {
  for (const el of document.querySelectorAll(".cell")) {
    el.classList.remove("linked");
    el.style.background = "";
  }
  const list = attempt(() => JSON.parse(links(state.deck, slideId))) ?? [];
  for (const l of list) {
    const el = $(`cell-${l.cell_index}`);
    if (!el) continue;
    el.classList.add("linked");
    // shade by similarity
    el.style.background = `rgba(199, 80, 0, ${(0.08 + 0.4 * l.similarity).toFixed(3)})`;
  }
  if (list.length) $(`cell-${list[0].cell_index}`)?.scrollIntoView({ block: "nearest", behavior: "smooth" });
}

function select(slideId) {
  state.selected = slideId;
  renderOutline();
  const s = JSON.parse(state.deck).slides.find((x) => x.id === slideId);
  const view = $("slide");
  const title = document.createElement("input");
  title.className = "title";
  title.id = "edit-title";
  title.value = s.title;
  const bullets = document.createElement("textarea");
  bullets.id = "edit-bullets";
  bullets.value = s.bullets.map((b) => b.text).join("\n");
  const prov = document.createElement("p");
  prov.className = "prov";
  const cellsOf = [...new Set(s.bullets.flatMap((b) => b.provenance.map((p) => p.cell_index)))];
  prov.textContent = s.empty_auto
    ? "No matching notebook content was located for this section."
    : cellsOf.length ? `From cells ${cellsOf.join(", ")}` : s.example_prompt ? "Example text: replace it with your own." : "";
  const images = s.attachments
    .filter((a) => a.kind === "image")
    .map((a) => {
      const img = document.createElement("img");
      img.src = `data:${a.mime};base64,${a.data}`;
      return img;
    });
  view.replaceChildren(title, bullets, prov, ...images);
  highlight(slideId);
}

function saveEdit() {
  const patch = JSON.stringify({
    title: $("edit-title").value,
    bullets: $("edit-bullets").value.split("\n").map((b) => b.trim()).filter(Boolean),
  });
  const next = attempt(() => edit(state.deck, state.selected, patch));
  if (!next) return;
  state.deck = next;
  select(state.selected);
  status(`saved, revision ${JSON.parse(next).revision}`);
}

function download(format, type) {
  const text = attempt(() => exportDeck(state.deck, format));
  if (text === undefined) return;
  const a = document.createElement("a");
  a.href = URL.createObjectURL(new Blob([text], { type }));
  a.download = `deck.${format}`;
  a.click();
  URL.revokeObjectURL(a.href);
}

$("file").onchange = async (e) => {
  const f = e.target.files[0];
  if (f) setNotebook(await f.text());
};
$("demo").onclick = async () => setNotebook(await (await fetch("pkg/demo.ipynb")).text());
$("generate").onclick = runGenerate;
$("save").onclick = saveEdit;
$("export-md").onclick = () => download("md", "text/markdown");
$("export-html").onclick = () => download("html", "text/html");
$("export-json").onclick = () => download("json", "application/json");

await init();
status("ready");
