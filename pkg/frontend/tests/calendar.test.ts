import { beforeEach, describe, expect, it } from "vitest";

import { cellPosition, renderCalendar, sliceHeight } from "../src/views/calendar";
import type { CalendarJson } from "../src/types";
import { makeYearCells } from "./fakes";

function yearCalendar(year: number): CalendarJson {
  // deterministic slice mix, including all-zero days
  return {
    year,
    cells: makeYearCells(year, (_date, i) =>
      i % 11 === 0 ? [0, 0, 0, 0] : [i % 5, (i * 3) % 7, (i * 7) % 4, i % 2],
    ),
  };
}

describe("cellPosition", () => {
  it("places January 1st 2022 (a Saturday) in column 0, row 6", () => {
    expect(cellPosition(2022, "2022-01-01")).toEqual({ col: 0, row: 6 });
  });

  it("starts the next week on the following Sunday", () => {
    expect(cellPosition(2022, "2022-01-02")).toEqual({ col: 1, row: 0 });
    expect(cellPosition(2022, "2022-01-08")).toEqual({ col: 1, row: 6 });
  });

  it("places December 31st 2022 in the last column", () => {
    expect(cellPosition(2022, "2022-12-31")).toEqual({ col: 52, row: 6 });
  });
});

describe("sliceHeight", () => {
  it("is zero only for empty slices and at least one pixel otherwise", () => {
    expect(sliceHeight(0, 100)).toBe(0);
    expect(sliceHeight(1, 10_000)).toBe(1);
  });

  it("scales linearly with the count", () => {
    const full = sliceHeight(100, 100);
    expect(sliceHeight(50, 100) * 2).toBeCloseTo(full, -1);
    expect(full).toBeGreaterThan(sliceHeight(99, 100) - 2);
  });
});

describe("renderCalendar", () => {
  let container: HTMLElement;

  beforeEach(() => {
    container = document.createElement("div");
    document.body.appendChild(container);
  });

  it("renders one cell per day of the year, each with four slice bars", () => {
    renderCalendar(container, yearCalendar(2022));
    const cells = container.querySelectorAll("g.cal-cell");
    expect(cells).toHaveLength(365);
    for (const cell of cells) {
      expect(cell.querySelectorAll("rect.cal-bar")).toHaveLength(4);
    }
    expect(container.querySelector('[data-date="2022-01-01"]')).not.toBeNull();
    expect(container.querySelector('[data-date="2022-12-31"]')).not.toBeNull();
  });

  it("renders 366 cells on a leap year", () => {
    renderCalendar(container, yearCalendar(2020));
    expect(container.querySelectorAll("g.cal-cell")).toHaveLength(366);
    expect(container.querySelector('[data-date="2020-02-29"]')).not.toBeNull();
  });

  it("sizes each bar against the year's busiest slice", () => {
    const calendar: CalendarJson = {
      year: 2022,
      cells: makeYearCells(2022, (date) =>
        date === "2022-03-05" ? [80, 40, 20, 0] : [1, 0, 0, 0],
      ),
    };
    renderCalendar(container, calendar);
    const busy = container.querySelector('[data-date="2022-03-05"]')!;
    const heights = [...busy.querySelectorAll("rect.cal-bar")].map((r) =>
      Number(r.getAttribute("height")),
    );
    expect(heights).toEqual([
      sliceHeight(80, 80),
      sliceHeight(40, 80),
      sliceHeight(20, 80),
      0,
    ]);
    expect(heights[1]! * 2).toBe(heights[0]!);

    const quiet = container.querySelector('[data-date="2022-07-01"]')!;
    const quietHeights = [...quiet.querySelectorAll("rect.cal-bar")].map((r) =>
      Number(r.getAttribute("height")),
    );
    expect(quietHeights).toEqual([1, 0, 0, 0]);
  });

  it("labels all twelve months once", () => {
    renderCalendar(container, yearCalendar(2022));
    const labels = [...container.querySelectorAll("text.cal-month")].map((t) => t.textContent);
    expect(labels).toEqual([
      "Jan", "Feb", "Mar", "Apr", "May", "Jun",
      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
    ]);
  });

  it("reports the clicked day", () => {
    const picked: string[] = [];
    renderCalendar(container, yearCalendar(2022), { onPickDay: (d) => picked.push(d) });
    const cell = container.querySelector<SVGGElement>('[data-date="2022-06-15"]')!;
    cell.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(picked).toEqual(["2022-06-15"]);
  });

  it("re-renders in place without duplicating cells", () => {
    renderCalendar(container, yearCalendar(2022));
    renderCalendar(container, yearCalendar(2022));
    expect(container.querySelectorAll("svg.calendar")).toHaveLength(1);
    expect(container.querySelectorAll("g.cal-cell")).toHaveLength(365);
  });
});
