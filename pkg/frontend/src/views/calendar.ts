/** Year calendar: one column per week, one cell per day, four bars per cell
 *  (the day's 6-hour UTC slices), background shading by hit density. */

import { select } from "d3";

import type { CalendarCellJson, CalendarJson } from "../types";

export const CELL_W = 16;
export const CELL_H = 22;
export const BAR_W = 3;
const CELL_PAD = 2;
const INNER_H = CELL_H - 2 * CELL_PAD;
const MARGIN = { top: 18, right: 4, bottom: 4, left: 30 };

const MONTHS = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];
const WEEKDAY_LABELS: ReadonlyArray<[row: number, label: string]> = [
  [1, "Mon"],
  [3, "Wed"],
  [5, "Fri"],
];

/** Grid coordinates of a date: col = week of year, row = weekday (Sunday first). */
export function cellPosition(year: number, isoDate: string): { col: number; row: number } {
  const t = Date.parse(`${isoDate}T00:00:00Z`);
  if (Number.isNaN(t)) throw new Error(`bad date: ${isoDate}`);
  const jan1Dow = new Date(Date.UTC(year, 0, 1)).getUTCDay();
  const offset = Math.round((t - Date.UTC(year, 0, 1)) / 86_400_000);
  if (offset < 0) throw new Error(`date ${isoDate} precedes year ${year}`);
  return { col: Math.floor((offset + jan1Dow) / 7), row: (offset + jan1Dow) % 7 };
}

/** Bar height in px for one slice count against the year's max slice count. */
export function sliceHeight(count: number, maxCount: number): number {
  if (count <= 0 || maxCount <= 0) return 0;
  return Math.max(1, Math.round((count / maxCount) * INNER_H));
}

export interface CalendarHandlers {
  onPickDay?: (date: string) => void;
}

export function renderCalendar(
  container: HTMLElement,
  calendar: CalendarJson,
  handlers: CalendarHandlers = {},
): void {
  container.innerHTML = "";
  const { year, cells } = calendar;
  const maxSlice = Math.max(1, ...cells.flatMap((c) => c.slices));
  const weeks = cells.length ? cellPosition(year, cells[cells.length - 1]!.date).col + 1 : 0;

  const svg = select(container)
    .append("svg")
    .attr("class", "calendar")
    .attr("width", MARGIN.left + weeks * CELL_W + MARGIN.right)
    .attr("height", MARGIN.top + 7 * CELL_H + MARGIN.bottom);

  const grid = svg
    .append("g")
    .attr("transform", `translate(${MARGIN.left},${MARGIN.top})`);

  for (const [row, label] of WEEKDAY_LABELS) {
    svg
      .append("text")
      .attr("class", "cal-weekday")
      .attr("x", MARGIN.left - 6)
      .attr("y", MARGIN.top + row * CELL_H + CELL_H / 2 + 3)
      .attr("text-anchor", "end")
      .text(label);
  }

  let lastMonth = -1;
  for (const cell of cells) {
    const month = Number(cell.date.slice(5, 7)) - 1;
    if (month !== lastMonth) {
      lastMonth = month;
      svg
        .append("text")
        .attr("class", "cal-month")
        .attr("x", MARGIN.left + cellPosition(year, cell.date).col * CELL_W)
        .attr("y", MARGIN.top - 6)
        .text(MONTHS[month] ?? "");
    }
  }

  const cellG = grid
    .selectAll<SVGGElement, CalendarCellJson>("g.cal-cell")
    .data(cells)
    .join("g")
    .attr("class", "cal-cell")
    .attr("data-date", (d) => d.date)
    .attr("transform", (d) => {
      const { col, row } = cellPosition(year, d.date);
      return `translate(${col * CELL_W},${row * CELL_H})`;
    });

  cellG
    .append("rect")
    .attr("class", "cal-bg")
    .attr("width", CELL_W - 1)
    .attr("height", CELL_H - 1)
    .attr("fill-opacity", (d) => (d.total > 0 ? 0.15 + 0.55 * d.density : 0.0));

  cellG
    .append("title")
    .text((d) => `${d.date} — ${d.total} hits (6h slices ${d.slices.join("/")})`);

  cellG.each(function (d) {
    const g = select(this);
    d.slices.forEach((count, i) => {
      const h = sliceHeight(count, maxSlice);
      g.append("rect")
        .attr("class", "cal-bar")
        .attr("data-slice", i)
        .attr("x", CELL_PAD + i * BAR_W)
        .attr("y", CELL_H - 1 - CELL_PAD - h)
        .attr("width", BAR_W - 1)
        .attr("height", h);
    });
  });

  if (handlers.onPickDay) {
    cellG.on("click", (_event, d) => handlers.onPickDay?.(d.date));
  }
}
