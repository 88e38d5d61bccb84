// App shell: two hash routes (Design, Monitor). The monitor route needs a
// design reference; it comes from the last calibration result stored by the
// design route, or a built-in default for exploration.

import { DesignView } from "./design.js";
import { MonitorView } from "./monitor.js";
import { loadSession } from "./state.js";
import type { DesignRef } from "./types.js";

const FALLBACK_DESIGN: DesignRef = {
  schedule: [80, 120, 160],
  phi: 0.5,
  efficacy: { lambda: 0.92, gamma: 0.9 },
  toxicity: { lambda: 0.93, gamma: 0.8 },
  delta: 0.1,
};

function route(): void {
  const outlet = document.getElementById("outlet");
  if (!outlet) return;
  const hash = window.location.hash || "#/design";
  for (const link of document.querySelectorAll<HTMLAnchorElement>("nav a")) {
    link.classList.toggle("active", link.getAttribute("href") === hash);
  }
  outlet.textContent = "";
  if (hash.startsWith("#/monitor")) {
    const session = loadSession();
    new MonitorView(outlet, session?.design ?? FALLBACK_DESIGN,
                    session ? { session } : {});
  } else {
    new DesignView(outlet);
  }
}

window.addEventListener("hashchange", route);
window.addEventListener("DOMContentLoaded", route);
