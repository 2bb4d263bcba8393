import init, { density_curve, histogram_comparison, fit_demo } from "./pkg/wmdld_web.js";

const $ = (id) => document.getElementById(id);
const angles = (text) => Float64Array.from(text.split(",").map(Number));

function plot(canvas, values, color, marks = []) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(...values) || 1;
  ctx.strokeStyle = "#bbb";
  for (const deg of marks) {
    const x = ((deg + 90) / 180) * w;
    ctx.beginPath(); ctx.moveTo(x, 0); ctx.lineTo(x, h); ctx.stroke();
  }
  ctx.strokeStyle = color;
  ctx.beginPath();
  values.forEach((v, i) => {
    const x = (i / values.length) * w;
    const y = h - 4 - (v / top) * (h - 8);
    i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#666";
  ctx.fillText("-90°", 2, h - 2);
  ctx.fillText("90°", w - 22, h - 2);
}

function drawDensity() {
  const k = Number($("k").value);
  $("k-value").textContent = k;
  plot($("density"), density_curve(k, 720), "#1f5fbf", [0]);
}

function runHistograms() {
  const a = angles($("hist-angles").value);
  try {
    const r = histogram_comparison(a, Number($("hist-seconds").value), Number($("hist-q").value), 180, Number($("hist-seed").value));
    plot($("hist-conf"), r.confidence, "#1f5fbf", [...a]);
    plot($("hist-norm"), r.norm, "#bf5f1f", [...a]);
    $("hist-out").textContent =
      `${r.points} points each\npeak-to-valley: confidence ${r.ratio_confidence.toFixed(1)}, magnitude ${r.ratio_norm.toFixed(1)}`;
  } catch (e) {
    $("hist-out").textContent = `error: ${e}`;
  }
}

function runFit() {
  const a = angles($("fit-angles").value);
  try {
    const r = fit_demo(a, Number($("fit-k").value), Number($("fit-n").value), Number($("fit-out").value), $("fit-weighted").checked, 7);
    const rows = [...r.angles].map((deg, i) =>
      `m${i + 1} ${deg.toFixed(2).padStart(7)}°  k ${r.concentrations[i].toFixed(2).padStart(6)}  a ${r.priors[i].toFixed(3)}`);
    $("fit-result").textContent = `${rows.join("\n")}\n${r.iterations} iterations`;
  } catch (e) {
    $("fit-result").textContent = `error: ${e}`;
  }
}

await init();
$("k").addEventListener("input", drawDensity);
$("hist-run").addEventListener("click", runHistograms);
$("fit-run").addEventListener("click", runFit);
drawDensity();
runHistograms();
