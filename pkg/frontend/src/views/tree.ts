/** Mixture explorer: the day's cluster tree as indented rows. Each row shows
 *  the node size plus one shaded chip per concept (darker = higher mean
 *  likelihood); clicking a row selects exactly that node's members. */

import type { TreeNodeJson } from "../types";

export interface TreeHandlers {
  onSelectNode: (nodeId: number) => void;
}

function chipAlpha(likelihood: number): number {
  return Math.max(0.06, Math.min(1, likelihood));
}

function renderNode(
  parent: HTMLElement,
  node: TreeNodeJson,
  depth: number,
  handlers: TreeHandlers,
): void {
  const row = parent.ownerDocument.createElement("div");
  row.className = "tree-node";
  row.dataset.nodeId = String(node.id);
  row.style.paddingLeft = `${depth * 16}px`;

  const label = parent.ownerDocument.createElement("span");
  label.className = "tree-size";
  label.textContent = `${node.children.length ? "▸" : "•"} ${node.size.toLocaleString("en-US")} frames`;
  row.appendChild(label);

  for (const concept of Object.keys(node.decoration).sort()) {
    const value = node.decoration[concept] ?? 0;
    const chip = parent.ownerDocument.createElement("span");
    chip.className = "tree-chip";
    chip.dataset.concept = concept;
    chip.style.backgroundColor = `rgba(26, 122, 62, ${chipAlpha(value).toFixed(3)})`;
    chip.title = `${concept}: mean likelihood ${value.toFixed(3)}`;
    chip.textContent = `${concept} ${value.toFixed(2)}`;
    row.appendChild(chip);
  }

  row.addEventListener("click", () => handlers.onSelectNode(node.id));
  parent.appendChild(row);
  for (const child of node.children) {
    renderNode(parent, child, depth + 1, handlers);
  }
}

export function renderTree(
  container: HTMLElement,
  root: TreeNodeJson | null,
  handlers: TreeHandlers,
): void {
  container.innerHTML = "";
  if (!root) {
    const empty = container.ownerDocument.createElement("div");
    empty.className = "tree-empty";
    empty.textContent = "load a day to build its mixture tree";
    container.appendChild(empty);
    return;
  }
  renderNode(container, root, 0, handlers);
}
