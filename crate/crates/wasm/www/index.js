import init, { evaluate, discrete, sector_moments } from "./pkg/kinklap_wasm.js";

const POINTS = {
  ball: ["center", "boundary"],
  cube: ["interior", "face", "edge", "vertex"],
};

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v) => v.toPrecision(8);

function fillPoints() {
  const select = $("point");
  select.replaceChildren(
    ...POINTS[$("shape").value].map((p) => new Option(p, p)),
  );
}

function guarded(out, body) {
  try {
    $(out).textContent = body();
  } catch (e) {
    $(out).textContent = `error: ${e.message ?? e}`;
  }
}

await init();
fillPoints();
$("shape").addEventListener("change", fillPoints);

$("evaluate").addEventListener("click", () =>
  guarded("evaluate-out", () => {
    const e = evaluate($("shape").value, $("point").value, num("t"), num("eta"));
    return [
      `continuum      ${fmt(e.continuum)}  (quadrature error ${e.quad_error.toExponential(2)})`,
      `predictor      ${fmt(e.predictor)}`,
      `√t·continuum   ${fmt(e.scaled_continuum)}`,
      `√t·predictor   ${fmt(e.scaled_predictor)}`,
    ].join("\n");
  }),
);

$("discrete").addEventListener("click", () =>
  guarded("discrete-out", () => {
    const d = discrete($("shape").value, $("point").value, num("t"), num("n"), num("seed"));
    return `graph Laplacian ${fmt(d.value)} ± ${d.stderr.toExponential(2)}  (n = ${d.n})`;
  }),
);

$("moments").addEventListener("click", () =>
  guarded("moments-out", () => sector_moments($("sector").value, num("dim"), num("k"))),
);
