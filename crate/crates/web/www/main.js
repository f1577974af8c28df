import init, { generate, synthesize, simulate } from "./pkg/dps_web.js";

const $ = (id) => document.getElementById(id);

function report(f) {
  $("status").textContent = "";
  $("status").className = "";
  try {
    f();
  } catch (e) {
    $("status").textContent = String(e.message ?? e);
    $("status").className = "error";
  }
}

$("family").addEventListener("change", () => {
  $("arch").value = $("family").value === "philosophers" ? "ccw" : "broadcast-A";
  $("size").value = $("family").value === "philosophers" ? 3 : 4;
});

$("generate").addEventListener("click", () =>
  report(() => {
    $("model").value = generate($("family").value, Number($("size").value), $("arch").value);
    $("result").value = "";
    $("table").textContent = "";
  }));

$("synthesize").addEventListener("click", () =>
  report(() => {
    const t0 = performance.now();
    const r = JSON.parse(synthesize($("model").value, $("refine").checked));
    const ms = (performance.now() - t0).toFixed(0);
    $("table").textContent = `${r.table}(${ms} ms)`;
    delete r.table;
    $("result").value = JSON.stringify(r, null, 2);
  }));

$("simulate").addEventListener("click", () =>
  report(() => {
    const result = $("apply").checked ? $("result").value : "";
    const lines = simulate($("model").value, result, Number($("steps").value), BigInt($("seed").value))
      .trim().split("\n").map((l) => JSON.parse(l));
    const steps = lines.slice(0, -1).map((l, k) => `${k}: ${l.chosen}  (enabled: ${l.enabledSet.join(", ")})`);
    steps.push(`outcome: ${lines[lines.length - 1].outcome}`);
    $("trace").textContent = steps.join("\n");
  }));

await init();
$("generate").click();
