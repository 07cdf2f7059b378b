// Build the wasm package into ./pkg first (see the README).
import init, { Demo } from "./pkg/afcm_wasm.js";

const RES = 120;
const $ = (id) => document.getElementById(id);
let demo = null;

function num(id) {
  return Number($(id).value);
}

// blue -> white -> red for signed data, white -> dark for magnitudes
function color(t, signed) {
  t = Math.max(-1, Math.min(1, t));
  if (signed) {
    const a = Math.round(255 * (1 - Math.abs(t)));
    return t >= 0 ? [255, a, a] : [a, a, 255];
  }
  const a = Math.round(255 * (1 - t));
  return [a, a, Math.min(255, a + 40)];
}

function paint(values, signed) {
  const canvas = $("view");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(RES, RES);
  let scale = 0;
  for (const v of values) scale = Math.max(scale, Math.abs(v));
  scale = scale || 1;
  for (let j = 0; j < RES; j++) {
    for (let i = 0; i < RES; i++) {
      // grid rows run along x with y increasing; flip y for the canvas
      const v = values[j * RES + i] / scale;
      const [r, g, b] = color(v, signed);
      const o = ((RES - 1 - j) * RES + i) * 4;
      img.data.set([r, g, b, 255], o);
    }
  }
  const off = new OffscreenCanvas(RES, RES);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  return scale;
}

function toCanvas(x, y) {
  const c = $("view");
  return [((x + 1) / 2) * c.width, (1 - (y + 1) / 2) * c.height];
}

function draw() {
  if (!demo) return;
  const k = num("iter");
  $("iterLabel").textContent = k;
  const layer = document.querySelector("input[name=layer]:checked").value;
  let scale;
  if (layer === "field") {
    scale = paint(demo.field(k, RES), true);
  } else if (layer === "error") {
    const f = demo.field(k, RES);
    const e = demo.exact(RES);
    scale = paint(f.map((v, i) => v - e[i]), true);
  } else {
    scale = paint(demo.density(k, RES, 0.2), false);
  }
  const ctx = $("view").getContext("2d");
  if ($("showPoints").checked) {
    ctx.fillStyle = "rgba(0,0,0,0.6)";
    const p = demo.points(k);
    for (let i = 0; i < p.length; i += 2) {
      const [x, y] = toCanvas(p[i], p[i + 1]);
      ctx.fillRect(x - 1, y - 1, 2, 2);
    }
  }
  if ($("showGammas").checked) {
    ctx.strokeStyle = "rgba(0,120,0,0.7)";
    const g = demo.gammas(k);
    const base = demo.gamma();
    for (let i = 0; i < g.length; i += 3) {
      const [x, y] = toCanvas(g[i], g[i + 1]);
      ctx.beginPath();
      ctx.arc(x, y, 1.5 * (g[i + 2] / base), 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
  $("status").textContent = `γ = ${demo.gamma().toFixed(2)}, color scale ±${scale.toExponential(2)}`;
}

function fillErrors() {
  const body = $("errors").querySelector("tbody");
  body.innerHTML = "";
  const e = demo.errors();
  for (let k = 0; k < e.length / 2; k++) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<td>${k}</td><td>${e[2 * k].toExponential(3)}</td><td>${e[2 * k + 1].toExponential(3)}</td>`;
    body.appendChild(tr);
  }
}

function solve() {
  $("status").textContent = "solving...";
  // let the status paint before the blocking solve
  setTimeout(() => {
    const t0 = performance.now();
    try {
      if (demo) demo.free();
      demo = new Demo(num("k"), num("n"), num("j"), num("q"), num("iters"), num("m"), num("gamma"), num("seed"));
    } catch (err) {
      demo = null;
      $("status").textContent = `failed: ${err}`;
      return;
    }
    const slider = $("iter");
    slider.max = demo.iterations() - 1;
    slider.value = slider.max;
    fillErrors();
    draw();
    $("status").textContent += `, ${((performance.now() - t0) / 1000).toFixed(1)} s`;
  }, 20);
}

await init();
$("run").addEventListener("click", solve);
$("iter").addEventListener("input", draw);
for (const el of document.querySelectorAll("input[name=layer], #showPoints, #showGammas")) {
  el.addEventListener("change", draw);
}
solve();
