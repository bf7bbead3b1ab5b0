import init, { recovery, separable, forecast } from "./pkg/tensorreg_web.js";

const $ = (id) => document.getElementById(id);

// diverging blue-white-red, symmetric around zero
function color(v, scale) {
  const t = Math.max(-1, Math.min(1, v / scale));
  const a = Math.round(255 * (1 - Math.abs(t)));
  return t >= 0 ? `rgb(255,${a},${a})` : `rgb(${a},${a},255)`;
}

function heatmap(canvas, rows, scale) {
  const ctx = canvas.getContext("2d");
  const h = rows.length, w = rows[0].length;
  const cw = canvas.width / w, ch = canvas.height / h;
  if (scale === undefined) scale = Math.max(...rows.flat().map(Math.abs)) || 1;
  rows.forEach((row, i) => row.forEach((v, j) => {
    ctx.fillStyle = color(v, scale);
    ctx.fillRect(j * cw, i * ch, Math.ceil(cw), Math.ceil(ch));
  }));
}

function fmt(v, d = 3) {
  return typeof v === "number" ? v.toFixed(d) : String(v);
}

function guarded(stats, f) {
  try {
    stats.classList.remove("error");
    f();
  } catch (e) {
    stats.classList.add("error");
    stats.textContent = String(e);
  }
}

function runRecovery() {
  const rank = +$("rec-rank").value;
  $("rec-rank-val").textContent = rank;
  guarded($("rec-stats"), () => {
    const r = JSON.parse(recovery(rank, +$("rec-n").value, +$("rec-noise").value, +$("rec-seed").value));
    const scale = Math.max(...r.truth.flat().map(Math.abs));
    heatmap($("rec-truth"), r.truth, scale);
    heatmap($("rec-est"), r.estimate, scale);
    $("rec-stats").textContent =
      `parameters      ${r.parameters} of ${r.full_parameters}\n` +
      `compression     ${fmt(100 * r.compression, 1)}%\n` +
      `relative error  ${fmt(r.relative_error)}\n` +
      `BIC             ${fmt(r.bic, 1)}`;
  });
}

function runSeparable() {
  const r1 = +$("ff-r1").value, r2 = +$("ff-r2").value;
  $("ff-r1-val").textContent = r1;
  $("ff-r2-val").textContent = r2;
  guarded($("ff-stats"), () => {
    const r = JSON.parse(separable(r1, r2, +$("ff-n").value, 1));
    heatmap($("ff-rows-est"), r.rows.estimate, 1);
    heatmap($("ff-rows-true"), r.rows.truth, 1);
    heatmap($("ff-cols-est"), r.cols.estimate, 1);
    heatmap($("ff-cols-true"), r.cols.truth, 1);
    $("ff-stats").textContent =
      `max error rows  ${fmt(r.rows.max_error)}\n` +
      `max error cols  ${fmt(r.cols.max_error)}\n` +
      `iterations      ${r.iterations}${r.converged ? "" : " (not converged)"}`;
  });
}

function drawSeries(canvas, y, split) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const lo = Math.min(...y), hi = Math.max(...y);
  const x = (t) => (t / (y.length - 1)) * canvas.width;
  const yy = (v) => canvas.height - 8 - ((v - lo) / (hi - lo || 1)) * (canvas.height - 16);
  ctx.fillStyle = "#f3f3f3";
  ctx.fillRect(x(split[0]), 0, x(split[0] + split[1]) - x(split[0]), canvas.height);
  ctx.fillStyle = "#e6efe6";
  ctx.fillRect(x(split[0] + split[1]), 0, canvas.width - x(split[0] + split[1]), canvas.height);
  ctx.strokeStyle = "#333";
  ctx.beginPath();
  y.forEach((v, t) => (t ? ctx.lineTo(x(t), yy(v)) : ctx.moveTo(x(t), yy(v))));
  ctx.stroke();
}

function runForecast() {
  const stats = $("fc-stats");
  stats.textContent = "fitting...";
  // let the status paint before the blocking call
  setTimeout(() => guarded(stats, () => {
    const r = JSON.parse(forecast(+$("fc-radius").value, +$("fc-len").value, +$("fc-seed").value));
    drawSeries($("fc-series"), r.series, r.split);
    const lines = r.tar_rmsfe.map((t, i) => `h=${i + 1}  TAR ${fmt(t)}   VAR ${fmt(r.var_rmsfe[i])}`);
    stats.textContent =
      `selected rank ${r.selected_rank}, lambda ${r.selected_lambda}\n\nRMSFE\n${lines.join("\n")}\n\n` +
      `DM rejections ${r.rejections} of ${r.cells}: ${r.favor_tar} favour TAR, ${r.favor_var} favour VAR`;
  }), 10);
}

await init();
for (const id of ["rec-rank", "rec-n", "rec-noise", "rec-seed"]) $(id).addEventListener("change", runRecovery);
$("rec-rank").addEventListener("input", () => ($("rec-rank-val").textContent = $("rec-rank").value));
for (const id of ["ff-r1", "ff-r2", "ff-n"]) $(id).addEventListener("change", runSeparable);
$("fc-run").addEventListener("click", runForecast);
runRecovery();
runSeparable();
runForecast();
