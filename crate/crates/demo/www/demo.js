// Built with `wasm-pack build crates/demo --target web --out-dir www/pkg`.
import init, { recover_topics, bound_curve, power_method } from "./pkg/spectral_labels_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"];

function show(el, obj) {
  if (obj.error) {
    el.innerHTML = `<span class="err">${obj.error}</span>`;
    return false;
  }
  return true;
}

function frame(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40.5, 10.5, w - 50, h - 40);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
}

// True (outline) vs estimated (filled) word distributions, one panel per topic.
function plotRecovery(r) {
  const c = $("rec-plot"), ctx = c.getContext("2d");
  frame(ctx, c.width, c.height);
  const top = Math.max(...r.true_o.flat(), ...r.est_o.flat());
  const panelW = (c.width - 50) / r.k, plotH = c.height - 50;
  r.true_o.forEach((col, t) => {
    const x0 = 40 + t * panelW, bw = (panelW - 10) / r.d;
    col.forEach((p, v) => {
      const hTrue = (p / top) * plotH, hEst = (r.est_o[t][v] / top) * plotH;
      ctx.fillStyle = COLORS[t % COLORS.length] + "99";
      ctx.fillRect(x0 + 5 + v * bw, 10 + plotH - hEst, Math.max(bw - 1, 1), hEst);
      ctx.strokeStyle = "#000";
      ctx.strokeRect(x0 + 5 + v * bw + 0.5, 10 + plotH - hTrue + 0.5, Math.max(bw - 1, 1), hTrue);
    });
    ctx.fillStyle = "#444";
    ctx.fillText(`topic ${t + 1}: ‖μ−μ̂‖ = ${r.mu_err[t].toFixed(3)}`, x0 + 8, c.height - 14);
  });
}

function runRecovery() {
  const out = $("rec-out");
  out.textContent = "training…";
  setTimeout(() => {
    const r = JSON.parse(recover_topics(num("rec-d"), num("rec-k"), num("rec-n"), num("rec-w"), num("rec-c"), num("rec-s")));
    if (!show(out, r)) return;
    plotRecovery(r);
    const f = (a) => a.map((x) => x.toFixed(4)).join("  ");
    out.textContent =
      `passes over data: ${r.passes}\n` +
      `π true      ${f(r.true_pi)}\nπ estimated ${f(r.est_pi)}\n` +
      `‖μ−μ̂‖₂     ${f(r.mu_err)}\n‖γ−γ̂‖₂     ${f(r.gamma_err)}\n` +
      `σ(M̂2)      ${r.sigma.map((x) => x.toExponential(3)).join("  ")}\n` +
      `λ           ${f(r.lambda)}\n(outlined bars: truth, filled: estimate)`;
  }, 10);
}

function runBounds() {
  const out = $("b-out");
  const r = JSON.parse(bound_curve(num("b-s1"), num("b-sk"), num("b-d2"), num("b-d3"), num("b-dl"), num("b-delta"), 1e3, 1e9, 60));
  if (!show(out, r)) return;
  const c = $("b-plot"), ctx = c.getContext("2d");
  frame(ctx, c.width, c.height);
  const series = [["μ bound", r.mu], ["γ bound", r.gamma], ["π bound", r.pi]];
  const all = series.flatMap((s) => s[1]).map(Math.log10);
  const lo = Math.floor(Math.min(...all)), hi = Math.ceil(Math.max(...all));
  const lx = r.n.map(Math.log10), x0 = lx[0], x1 = lx[lx.length - 1];
  const X = (v) => 40 + ((v - x0) / (x1 - x0)) * (c.width - 50);
  const Y = (v) => 10 + (1 - (v - lo) / (hi - lo || 1)) * (c.height - 40);
  series.forEach(([name, ys], i) => {
    ctx.strokeStyle = COLORS[i];
    ctx.beginPath();
    ys.forEach((y, j) => (j ? ctx.lineTo : ctx.moveTo).call(ctx, X(lx[j]), Y(Math.log10(y))));
    ctx.stroke();
    ctx.fillStyle = COLORS[i];
    ctx.fillText(name, c.width - 90, 26 + 16 * i);
  });
  ctx.fillStyle = "#444";
  for (let e = Math.ceil(x0); e <= x1; e++) ctx.fillText(`1e${e}`, X(e) - 10, c.height - 14);
  ctx.fillText(`1e${hi}`, 2, 20);
  ctx.fillText(`1e${lo}`, 2, c.height - 32);
  out.textContent = `ε₁ = ${r.eps1.toFixed(5)}   ε₂ = ${r.eps2.toFixed(5)}   (log-log axes; every bound falls as 1/√N)`;
}

function runPower() {
  const out = $("p-out");
  const r = JSON.parse(power_method(num("p-k"), num("p-noise"), num("p-s")));
  if (!show(out, r)) return;
  const c = $("p-plot"), ctx = c.getContext("2d");
  frame(ctx, c.width, c.height);
  const top = Math.max(...r.true_lambda, ...r.est_lambda) * 1.1;
  const bw = (c.width - 60) / r.k;
  r.true_lambda.forEach((l, i) => {
    const h1 = (l / top) * (c.height - 50), h2 = (r.est_lambda[i] / top) * (c.height - 50);
    ctx.fillStyle = "#bbb";
    ctx.fillRect(45 + i * bw, 10 + c.height - 50 - h1, bw / 2 - 4, h1);
    ctx.fillStyle = COLORS[0];
    ctx.fillRect(45 + i * bw + bw / 2, 10 + c.height - 50 - h2, bw / 2 - 4, h2);
    ctx.fillStyle = "#444";
    ctx.fillText(`‖u−û‖ ${r.vector_err[i].toExponential(1)}`, 45 + i * bw, c.height - 14);
  });
  out.textContent =
    `λ true      ${r.true_lambda.map((x) => x.toFixed(6)).join("  ")}\n` +
    `λ recovered ${r.est_lambda.map((x) => x.toFixed(6)).join("  ")}\n` +
    `iterations  ${r.iterations.join("  ")}\n(grey: constructed, blue: recovered)`;
}

await init();
$("rec-run").onclick = runRecovery;
$("b-run").onclick = runBounds;
$("p-run").onclick = runPower;
runBounds();
runPower();
