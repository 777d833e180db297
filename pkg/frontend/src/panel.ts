import type { ClusterProfile, EmbedResponse } from "./api";

// Legend and result panel. All values are lifted straight from service
// responses; the only work done here is number formatting.

export function percent(x: number): string {
  return `${(100 * x).toFixed(1)}%`;
}

function ciText(ci: [number, number]): string {
  return `${(100 * ci[0]).toFixed(1)} to ${(100 * ci[1]).toFixed(1)}`;
}

function admitText(profile: ClusterProfile): string {
  if (!profile.admit_rate) return "admit rate n/a";
  return `admit ${percent(profile.admit_rate.mean)} (${ciText(profile.admit_rate.ci)})`;
}

function chip(doc: Document, color: string): HTMLElement {
  const el = doc.createElement("span");
  el.className = "chip";
  el.style.background = color;
  return el;
}

export function renderLegend(
  container: HTMLElement,
  clusters: ClusterProfile[],
  colorOf: (cluster: number) => string,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const profile of clusters) {
    const entry = doc.createElement("div");
    entry.className = "legend-entry";
    entry.appendChild(chip(doc, colorOf(profile.cluster)));

    const label = doc.createElement("span");
    label.className = "legend-label";
    label.textContent = `cluster ${profile.cluster}`;
    entry.appendChild(label);

    const share = doc.createElement("span");
    share.className = "legend-share";
    share.textContent = percent(profile.share ?? profile.share_mean);
    entry.appendChild(share);

    const admit = doc.createElement("span");
    admit.className = "legend-admit";
    admit.textContent = admitText(profile);
    entry.appendChild(admit);

    container.appendChild(entry);
  }
}

export function renderResult(
  container: HTMLElement,
  result: EmbedResponse,
  colorOf: (cluster: number) => string,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";

  const heading = doc.createElement("h3");
  heading.appendChild(chip(doc, colorOf(result.cluster)));
  heading.appendChild(doc.createTextNode(` cluster ${result.cluster}`));
  container.appendChild(heading);

  const resp = doc.createElement("div");
  resp.className = "responsibilities";
  result.responsibilities.forEach((r, k) => {
    const line = doc.createElement("div");
    line.className = "resp-line";
    const tag = doc.createElement("span");
    tag.className = "resp-tag";
    tag.textContent = `c${k}`;
    const bar = doc.createElement("span");
    bar.className = "resp-bar";
    bar.style.width = `${Math.round(100 * r)}px`;
    bar.style.background = colorOf(k);
    const num = doc.createElement("span");
    num.className = "resp-num";
    num.textContent = percent(r);
    line.append(tag, bar, num);
    resp.appendChild(line);
  });
  container.appendChild(resp);

  if (result.profile) {
    const cohort = doc.createElement("p");
    cohort.className = "cohort-line";
    cohort.textContent =
      `${percent(result.profile.share ?? result.profile.share_mean)} of cohort, ` +
      admitText(result.profile);
    container.appendChild(cohort);

    if (result.profile.top_features.length > 0) {
      const head = doc.createElement("h4");
      head.textContent = "distinguishing features";
      container.appendChild(head);
      const table = doc.createElement("table");
      table.className = "feature-table";
      for (const f of result.profile.top_features) {
        const tr = doc.createElement("tr");
        const name = doc.createElement("td");
        name.textContent = f.feature;
        const diff = doc.createElement("td");
        diff.className = "feature-diff";
        diff.textContent = (f.difference >= 0 ? "+" : "") + f.difference.toFixed(2);
        tr.append(name, diff);
        table.appendChild(tr);
      }
      container.appendChild(table);
    }
  }

  if (result.warnings.length > 0) {
    const list = doc.createElement("ul");
    list.className = "warnings";
    for (const w of result.warnings) {
      const item = doc.createElement("li");
      item.textContent = `${w.column}: ${w.detail}`;
      list.appendChild(item);
    }
    container.appendChild(list);
  }
}
