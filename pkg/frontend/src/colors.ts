// Cluster colors are a pure function of the cluster id, so the assignment
// survives refreshes and stays consistent between the map, legend and panel.

const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#b07aa1",
  "#76b7b2",
  "#edc948",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
  "#86bcb6",
  "#d37295",
];

export function clusterColor(cluster: number): string {
  const idx = ((cluster % PALETTE.length) + PALETTE.length) % PALETTE.length;
  return PALETTE[idx];
}
