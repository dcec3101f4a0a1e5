// Expects the wasm-pack output (`--target web`) in ./pkg.
import init, { cellView, exampleCurves, sweepView } from "./pkg/homogen_wasm.js";

const $ = (id) => document.getElementById(id);

function bounds(series) {
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (lo === hi) { lo -= 1; hi += 1; }
  return [lo, hi];
}

// Draws (x, y[k]) polylines; `log` plots both axes in log10.
function plot(canvas, x, ys, colors, { log = false, dots = false } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const tx = log ? x.map(Math.log10) : x;
  const ty = log ? ys.map((s) => s.map(Math.log10)) : ys;
  const [x0, x1] = bounds([tx]);
  const [y0, y1] = bounds(ty);
  const px = (v) => pad + ((v - x0) / (x1 - x0)) * (W - 2 * pad);
  const py = (v) => H - pad - ((v - y0) / (y1 - y0)) * (H - 2 * pad);
  ctx.strokeStyle = "#aaa";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  const fmt = (v) => (log ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(fmt(y1), 2, pad + 4);
  ctx.fillText(fmt(y0), 2, H - pad);
  ctx.fillText(fmt(x0), pad, H - pad + 14);
  ctx.fillText(fmt(x1), W - pad - 30, H - pad + 14);
  ty.forEach((s, k) => {
    ctx.strokeStyle = ctx.fillStyle = colors[k];
    ctx.beginPath();
    s.forEach((v, i) => (i ? ctx.lineTo(px(tx[i]), py(v)) : ctx.moveTo(px(tx[i]), py(v))));
    ctx.stroke();
    if (dots) s.forEach((v, i) => ctx.fillRect(px(tx[i]) - 2, py(v) - 2, 4, 4));
  });
}

function matrix(v) {
  const d = Math.round(Math.sqrt(v.length));
  const rows = [];
  for (let i = 0; i < d; i++) rows.push(v.slice(i * d, i * d + d).map((x) => x.toFixed(9)).join("  "));
  return rows.join("\n      ");
}

function showCell() {
  const n = 2 ** Number($("cell-n").value);
  $("cell-n-val").textContent = n;
  try {
    const v = cellView($("cell-field").value, n);
    const y = Array.from(v.y());
    const y1 = [...y, 1];
    const k = Array.from(v.coefficient());
    const c = Array.from(v.corrector()).map((t) => 10 * t);
    plot($("cell-plot"), y1, [[...k, k[0]], [...c, c[0]]], ["#1f77b4", "#d62728"]);
    $("cell-out").textContent =
      `K0    ${matrix(Array.from(v.k0()))}\nVoigt ${matrix(Array.from(v.voigt()))}\nReuss ${matrix(Array.from(v.reuss()))}`;
  } catch (e) {
    $("cell-out").textContent = String(e);
  }
}

function showExample() {
  const r = Number($("ex-ratio").value);
  $("ex-ratio-val").textContent = r;
  try {
    const c = exampleCurves(r, Number($("ex-cpp").value));
    const x = Array.from(c.x()), p = c.p(), p0 = c.p0(), p1 = c.p1(), ex = c.exact();
    const d0 = x.map((_, i) => p[i] - p0[i]);
    const d1 = x.map((_, i) => p[i] - p1[i]);
    const dx = x.map((_, i) => ex[i] - p0[i]);
    plot($("ex-plot"), x, [dx, d0, d1], ["#999", "#2ca02c", "#d62728"]);
    const [l2, h1, en, h1p0] = c.metrics();
    $("ex-out").textContent =
      `e_L2 ${l2.toExponential(4)}   e_H1 ${h1.toExponential(4)} (against p0: ${h1p0.toExponential(4)})   e_energy ${en.toExponential(4)}`;
  } catch (e) {
    $("ex-out").textContent = String(e);
  }
}

function runSweep() {
  $("sw-out").textContent = "running...";
  // let the status paint before the blocking solve
  setTimeout(() => {
    try {
      const s = sweepView(3, Number($("sw-max").value), 16);
      plot($("sw-plot"), Array.from(s.eps()), [s.e_l2(), s.e_h1(), s.e_energy()].map((a) => Array.from(a)),
        ["#1f77b4", "#d62728", "#2ca02c"], { log: true, dots: true });
      const [a, b, c] = s.rates();
      $("sw-out").textContent = `fitted rates in l/D:  e_L2 ${a.toFixed(3)}   e_H1 ${b.toFixed(3)}   e_energy ${c.toFixed(3)}`;
    } catch (e) {
      $("sw-out").textContent = String(e);
    }
  }, 10);
}

await init();
$("cell-field").onchange = $("cell-n").oninput = showCell;
$("ex-ratio").oninput = $("ex-cpp").onchange = showExample;
$("sw-run").onclick = runSweep;
showCell();
showExample();
