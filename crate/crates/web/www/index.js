import init, { simulate, compare_policies, restart_map } from "./pkg/echoloop_web.js";

const COLORS = ["#888", "#d08020", "#2a6fdb", "#2a9d4b"];

function read(id) {
  const out = {};
  for (const el of document.querySelectorAll(`#${id} [name]`)) {
    out[el.name] = el.tagName === "SELECT" ? el.value : Number(el.value);
  }
  return out;
}

function guarded(id, fn) {
  const err = document.getElementById(`${id}-err`);
  return () => {
    err.textContent = "";
    try {
      fn(read(id));
    } catch (e) {
      err.textContent = String(e);
    }
  };
}

function axes(ctx, w, h, pad, xmax, ymax, xlabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad, 8);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - 8, h - pad);
  ctx.stroke();
  ctx.fillText(ymax.toPrecision(3), 4, 14);
  ctx.fillText("0", pad - 12, h - pad);
  ctx.fillText(`${xlabel} ${xmax}`, w - 80, h - pad + 16);
}

function line(ctx, xs, ys, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ys.forEach((y, i) => (i ? ctx.lineTo(sx(xs[i]), sy(y)) : ctx.moveTo(sx(xs[i]), sy(y))));
  ctx.stroke();
}

function legend(id, entries) {
  document.getElementById(id).innerHTML = entries
    .map(([name, color]) => `<span><i style="background:${color}"></i>${name}</span>`)
    .join("");
}

function drawTrajectory(p) {
  const t = simulate(p.policy, p.epsilon, p.model, p.w, p.q, p.s, p.items, p.shown, p.horizon, BigInt(p.seed));
  const amp = t.amplitude, top = t.maxInterest;
  const canvas = document.getElementById("traj-plot");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas, pad = 30;
  const ymax = Math.max(1e-9, ...amp, ...top);
  const ymin = Math.min(0, ...top);
  const xs = amp.map((_, i) => i);
  const sx = (x) => pad + ((w - pad - 10) * x) / Math.max(1, xs.length - 1);
  const sy = (y) => h - pad - ((h - pad - 10) * (y - ymin)) / (ymax - ymin);
  axes(ctx, w, h, pad, xs.length - 1, ymax, "t");
  line(ctx, xs, amp, sx, sy, COLORS[2]);
  line(ctx, xs, top, sx, sy, COLORS[1]);
  legend("traj-legend", [["loop amplitude", COLORS[2]], ["max interest", COLORS[1]]]);

  const bars = document.getElementById("traj-bars").getContext("2d");
  const init0 = t.initial, last = t.finalInterests;
  const bw = 940, bh = 160, n = init0.length;
  const lo = Math.min(0, ...init0, ...last), hi = Math.max(0, ...init0, ...last);
  const y = (v) => bh - 14 - ((bh - 24) * (v - lo)) / (hi - lo || 1);
  bars.clearRect(0, 0, bw, bh);
  bars.font = "11px system-ui";
  const slot = (bw - 40) / n;
  for (let i = 0; i < n; i++) {
    const x = 30 + i * slot;
    bars.fillStyle = "#ccc";
    bars.fillRect(x, Math.min(y(0), y(init0[i])), slot * 0.4, Math.abs(y(init0[i]) - y(0)));
    bars.fillStyle = COLORS[2];
    bars.fillRect(x + slot * 0.42, Math.min(y(0), y(last[i])), slot * 0.4, Math.abs(y(last[i]) - y(0)));
    bars.fillStyle = "#444";
    bars.fillText(String(i), x + slot * 0.3, bh - 2);
  }
  bars.fillText("interest per item: start (grey), end (blue)", 30, 12);
}

function drawComparison(p) {
  const c = compare_policies(p.w, p.epsilon, p.items, p.shown, p.horizon, p.trials, Math.max(1, Math.floor(p.horizon / 200)), BigInt(p.seed));
  const names = c.names, steps = c.steps;
  const canvas = document.getElementById("cmp-plot");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas, pad = 30;
  let ymax = 1e-9;
  names.forEach((_, i) => {
    const m = c.mean(i), hw = c.halfWidth(i);
    m.forEach((v, k) => (ymax = Math.max(ymax, v + hw[k])));
  });
  const sx = (x) => pad + ((w - pad - 10) * x) / Math.max(1, steps[steps.length - 1]);
  const sy = (y) => h - pad - ((h - pad - 10) * y) / ymax;
  axes(ctx, w, h, pad, steps[steps.length - 1], ymax, "t");
  names.forEach((_, i) => {
    const m = c.mean(i), hw = c.halfWidth(i);
    ctx.fillStyle = COLORS[i] + "33";
    ctx.beginPath();
    steps.forEach((x, k) => (k ? ctx.lineTo(sx(x), sy(m[k] + hw[k])) : ctx.moveTo(sx(x), sy(m[k] + hw[k]))));
    for (let k = steps.length - 1; k >= 0; k--) ctx.lineTo(sx(steps[k]), sy(Math.max(0, m[k] - hw[k])));
    ctx.fill();
    line(ctx, steps, m, sx, sy, COLORS[i]);
  });
  legend("cmp-legend", names.map((n, i) => [n, COLORS[i]]));
}

function heat(v, lo, hi) {
  const f = hi > lo ? (Math.log(v) - Math.log(lo)) / (Math.log(hi) - Math.log(lo)) : 0.5;
  const x = Math.min(1, Math.max(0, f));
  return `hsl(${220 - 200 * x}, 70%, ${85 - 40 * x}%)`;
}

function drawMap(p) {
  const m = restart_map(p.policy, p.epsilon, p.items, p.shown, p.horizon, p.trials, p.qpoints, BigInt(p.seed));
  const q = m.q, s = m.s, obs = m.observed, bound = m.bound;
  const canvas = document.getElementById("map-plot");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas, left = 60, bottom = 30;
  const cw = (w - left - 10) / q.length, ch = (h - bottom - 10) / s.length;
  const pos = obs.filter((v) => v > 0);
  const lo = Math.min(...pos), hi = Math.max(...pos);
  ctx.clearRect(0, 0, w, h);
  ctx.font = "11px system-ui";
  ctx.textAlign = "center";
  s.forEach((sv, r) => {
    q.forEach((qv, k) => {
      const i = r * q.length + k;
      const x = left + k * cw, y = 10 + (s.length - 1 - r) * ch;
      ctx.fillStyle = obs[i] > 0 ? heat(obs[i], lo, hi) : "#eee";
      ctx.fillRect(x, y, cw - 1, ch - 1);
      ctx.fillStyle = "#111";
      ctx.fillText(obs[i].toFixed(2), x + cw / 2, y + ch / 2 - 2);
      const b = bound[i] >= 1e300 ? "∞" : bound[i].toPrecision(3);
      ctx.fillStyle = obs[i] > bound[i] ? "#b00" : "#555";
      ctx.fillText(`≤ ${b}`, x + cw / 2, y + ch / 2 + 12);
    });
    ctx.fillStyle = "#444";
    ctx.fillText(`s=${sv}`, 28, 10 + (s.length - 1 - r) * ch + ch / 2);
  });
  q.forEach((qv, k) => ctx.fillText(`q=${qv.toPrecision(2)}`, left + k * cw + cw / 2, h - 10));
}

await init();
document.querySelector("#traj button").addEventListener("click", guarded("traj", drawTrajectory));
document.querySelector("#cmp button").addEventListener("click", guarded("cmp", drawComparison));
document.querySelector("#map button").addEventListener("click", guarded("map", drawMap));
guarded("traj", drawTrajectory)();
