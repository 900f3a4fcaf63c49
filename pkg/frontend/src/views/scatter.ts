/** 2-D layout viewer with rectangular brushing over frame points. */

import { brush as d3brush, scaleLinear, select } from "d3";
import type { BrushBehavior, D3BrushEvent, ScaleLinear, Selection } from "d3";

import { refKey, type FrameRefJson, type LayoutPointJson, type RefKey } from "../types";

export const PLOT_SIZE = 520;
export const PAD = 18;

type PixelExtent = [[number, number], [number, number]];

export interface ScatterHandlers {
  /** Fired on brush end with the frames inside the rectangle. */
  onBrush: (refs: FrameRefJson[]) => void;
  /** Fired when an existing brush is dismissed. */
  onClear?: () => void;
}

function safeDomain(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return lo === hi ? [lo - 1, hi + 1] : [lo, hi];
}

export class ScatterView {
  private readonly svg: Selection<SVGSVGElement, unknown, null, undefined>;
  private readonly pointsG: Selection<SVGGElement, unknown, null, undefined>;
  private readonly brushG: Selection<SVGGElement, unknown, null, undefined>;
  private readonly brushBehavior: BrushBehavior<unknown>;
  private points: LayoutPointJson[] = [];
  private sx: ScaleLinear<number, number> = scaleLinear();
  private sy: ScaleLinear<number, number> = scaleLinear();

  constructor(container: HTMLElement, handlers: ScatterHandlers) {
    this.svg = select(container)
      .append("svg")
      .attr("class", "scatter")
      .attr("width", PLOT_SIZE)
      .attr("height", PLOT_SIZE)
      .attr("viewBox", `0 0 ${PLOT_SIZE} ${PLOT_SIZE}`);
    this.pointsG = this.svg.append("g").attr("class", "scatter-points");
    this.brushBehavior = d3brush<unknown>()
      .extent([
        [0, 0],
        [PLOT_SIZE, PLOT_SIZE],
      ])
      .on("end", (event: D3BrushEvent<unknown>) => {
        if (event.selection) {
          handlers.onBrush(this.pick(event.selection as PixelExtent));
        } else {
          handlers.onClear?.();
        }
      });
    this.brushG = this.svg.append("g").attr("class", "scatter-brush");
    this.brushG.call(this.brushBehavior);
  }

  /** Frames whose pixel positions fall inside the rectangle. */
  pick(extent: PixelExtent): LayoutPointJson[] {
    const [[x0, y0], [x1, y1]] = extent;
    return this.points.filter((p) => {
      const px = this.sx(p.x);
      const py = this.sy(p.y);
      return px >= x0 && px <= x1 && py >= y0 && py <= y1;
    });
  }

  /** Programmatic brush, driving the same path as a pointer gesture. */
  applyBrush(extent: PixelExtent | null): void {
    this.brushBehavior.move(this.brushG, extent);
  }

  render(points: LayoutPointJson[], highlight: Set<RefKey> = new Set()): void {
    this.points = points;
    this.sx = scaleLinear()
      .domain(safeDomain(points.map((p) => p.x)))
      .range([PAD, PLOT_SIZE - PAD]);
    this.sy = scaleLinear()
      .domain(safeDomain(points.map((p) => p.y)))
      .range([PLOT_SIZE - PAD, PAD]);

    this.pointsG
      .selectAll<SVGCircleElement, LayoutPointJson>("circle.pt")
      .data(points, (d) => refKey(d))
      .join("circle")
      .attr("class", "pt")
      .attr("r", 2.5)
      .attr("cx", (d) => this.sx(d.x))
      .attr("cy", (d) => this.sy(d.y))
      .classed("sel", (d) => highlight.has(refKey(d)));
  }

  setHighlight(keys: Set<RefKey>): void {
    this.pointsG
      .selectAll<SVGCircleElement, LayoutPointJson>("circle.pt")
      .classed("sel", (d) => keys.has(refKey(d)));
  }
}
