import { describe, expect, it } from "vitest";

import {
  SearchState,
  emptyState,
  fromQueryString,
  recordId,
  toApiParams,
  toQueryString,
  toggleSelection,
} from "../src/state.js";

describe("SearchState URL round-trip", () => {
  it("reproduces an identical state", () => {
    const state: SearchState = {
      drug: "Amoxicillin",
      matrix: "Milk",
      species: "",
      test: "Charm",
      manufacturer: "",
      belowToleranceOnly: true,
      page: 2,
      sort: "test",
      selection: ["Amoxicillin|Charm 3 SL3 Beta-Lactam|Milk|"],
    };
    expect(fromQueryString(toQueryString(state))).toEqual(state);
  });

  it("round-trips the empty state to an empty query string", () => {
    expect(toQueryString(emptyState())).toBe("");
    expect(fromQueryString("")).toEqual(emptyState());
  });

  it("round-trips values needing percent-encoding", () => {
    const state = { ...emptyState(), drug: 'Quoted "drug", & more', matrix: "µg/kg" };
    expect(fromQueryString(toQueryString(state))).toEqual(state);
  });

  it("round-trips every combination of a small state space", () => {
    const drugs = ["", "Amoxicillin"];
    const pages = [0, 3];
    const below = [false, true];
    const selections = [[], ["a|b|c|"], ["a|b|c|", "d|e|f|Sequential"]];
    for (const drug of drugs)
      for (const page of pages)
        for (const belowToleranceOnly of below)
          for (const selection of selections) {
            const state = { ...emptyState(), drug, page, belowToleranceOnly, selection };
            expect(fromQueryString(toQueryString(state))).toEqual(state);
          }
  });

  it("ignores junk in the query string", () => {
    const state = fromQueryString("?page=-4&sort=nonsense&bogus=1");
    expect(state.page).toBe(0);
    expect(state.sort).toBe("drug");
  });
});

describe("API parameter mapping", () => {
  it("sends only non-empty filters plus pagination", () => {
    const state = { ...emptyState(), drug: "Amoxicillin", matrix: "Milk", page: 1 };
    const params = toApiParams(state);
    expect(params.get("drug")).toBe("Amoxicillin");
    expect(params.get("matrix")).toBe("Milk");
    expect(params.has("species")).toBe(false);
    expect(params.get("limit")).toBe("25");
    expect(params.get("offset")).toBe("25");
  });

  it("maps the below-tolerance toggle", () => {
    const params = toApiParams({ ...emptyState(), belowToleranceOnly: true });
    expect(params.get("below_tolerance_only")).toBe("true");
  });
});

describe("comparison selection", () => {
  const row = { drug: "Amoxicillin", test: "T", matrix: "Milk", type: "" };

  it("builds stable record ids", () => {
    expect(recordId(row)).toBe("Amoxicillin|T|Milk|");
  });

  it("toggles ids in and out", () => {
    let state = emptyState();
    state = toggleSelection(state, recordId(row));
    expect(state.selection).toEqual(["Amoxicillin|T|Milk|"]);
    state = toggleSelection(state, recordId(row));
    expect(state.selection).toEqual([]);
  });
});
