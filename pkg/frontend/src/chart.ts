// Hand-rolled SVG chart: posterior-probability points per analysis over the
// step-function futility/superiority boundary curves. Values come straight
// from server responses; this module only draws.

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 460;
const H = 220;
const PAD = { left: 44, right: 12, top: 12, bottom: 28 };

function el(name: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export type ChartSeries = {
  nCum: number[];
  futility: (number | null)[];
  superiority: (number | null)[];
  finalThreshold: number | null;
  ppTrace: number[];
};

export function renderPpChart(container: HTMLElement, series: ChartSeries): void {
  container.textContent = "";
  const svg = el("svg", { viewBox: `0 0 ${W} ${H}`, width: "100%" }) as SVGSVGElement;
  const R = series.nCum.length;
  const x = (r: number) => PAD.left + ((r + 0.5) / R) * (W - PAD.left - PAD.right);
  const y = (p: number) => PAD.top + (1 - p) * (H - PAD.top - PAD.bottom);

  for (const tick of [0, 0.25, 0.5, 0.75, 1]) {
    svg.appendChild(el("line", {
      x1: PAD.left, x2: W - PAD.right, y1: y(tick), y2: y(tick),
      stroke: "#ddd", "stroke-width": 1,
    }));
    const label = el("text", {
      x: PAD.left - 6, y: y(tick) + 4, "text-anchor": "end",
      "font-size": 10, fill: "#666",
    });
    label.textContent = tick.toFixed(2);
    svg.appendChild(label);
  }

  const step = (values: (number | null)[], color: string) => {
    for (let r = 0; r < R; r++) {
      const v = values[r];
      if (v === null || v === undefined) continue;
      const x0 = PAD.left + (r / R) * (W - PAD.left - PAD.right);
      const x1 = PAD.left + ((r + 1) / R) * (W - PAD.left - PAD.right);
      svg.appendChild(el("line", {
        x1: x0, x2: x1, y1: y(v), y2: y(v), stroke: color, "stroke-width": 2,
      }));
    }
  };
  const futility = [...series.futility];
  const superiority = [...series.superiority];
  if (series.finalThreshold !== null) {
    // final analysis: the single threshold replaces both interim curves
    futility[R - 1] = series.finalThreshold;
    superiority[R - 1] = series.finalThreshold;
  }
  step(futility, "#cc3311");
  step(superiority, "#117733");

  series.ppTrace.forEach((pp, r) => {
    svg.appendChild(el("circle", {
      cx: x(r), cy: y(pp), r: 5, fill: "#0077bb", stroke: "#fff", "stroke-width": 1.5,
    }));
  });

  series.nCum.forEach((n, r) => {
    const label = el("text", {
      x: x(r), y: H - 8, "text-anchor": "middle", "font-size": 10, fill: "#444",
    });
    label.textContent = `n=${n}`;
    svg.appendChild(label);
  });

  container.appendChild(svg);
}
