/**
 * Search state and its URL (de)serialization.
 *
 * The whole state lives in the query string so any search is shareable and
 * the back button works. Round-tripping through the URL must reproduce an
 * identical state object.
 */

export type SortColumn = "drug" | "test" | "sensitivity" | "matrix";

export interface SearchState {
  drug: string;
  matrix: string;
  species: string;
  test: string;
  manufacturer: string;
  belowToleranceOnly: boolean;
  page: number;
  sort: SortColumn;
  /** record ids (drug|test|matrix|type) picked for side-by-side comparison */
  selection: string[];
}

export const PAGE_SIZE = 25;

export function emptyState(): SearchState {
  return {
    drug: "",
    matrix: "",
    species: "",
    test: "",
    manufacturer: "",
    belowToleranceOnly: false,
    page: 0,
    sort: "drug",
    selection: [],
  };
}

const SORT_COLUMNS: SortColumn[] = ["drug", "test", "sensitivity", "matrix"];

export function toQueryString(state: SearchState): string {
  const params = new URLSearchParams();
  for (const field of ["drug", "matrix", "species", "test", "manufacturer"] as const) {
    if (state[field]) params.set(field, state[field]);
  }
  if (state.belowToleranceOnly) params.set("below", "1");
  if (state.page > 0) params.set("page", String(state.page));
  if (state.sort !== "drug") params.set("sort", state.sort);
  for (const id of state.selection) params.append("sel", id);
  return params.toString();
}

export function fromQueryString(query: string): SearchState {
  const params = new URLSearchParams(query);
  const state = emptyState();
  for (const field of ["drug", "matrix", "species", "test", "manufacturer"] as const) {
    state[field] = params.get(field) ?? "";
  }
  state.belowToleranceOnly = params.get("below") === "1";
  const page = Number(params.get("page") ?? "0");
  state.page = Number.isInteger(page) && page > 0 ? page : 0;
  const sort = params.get("sort");
  state.sort = SORT_COLUMNS.includes(sort as SortColumn) ? (sort as SortColumn) : "drug";
  state.selection = params.getAll("sel");
  return state;
}

/** Query parameters for GET /records; pagination is applied server-side. */
export function toApiParams(state: SearchState): URLSearchParams {
  const params = new URLSearchParams();
  for (const field of ["drug", "matrix", "species", "test", "manufacturer"] as const) {
    if (state[field]) params.set(field, state[field]);
  }
  if (state.belowToleranceOnly) params.set("below_tolerance_only", "true");
  params.set("limit", String(PAGE_SIZE));
  params.set("offset", String(state.page * PAGE_SIZE));
  return params;
}

export function recordId(row: { drug: string; test: string; matrix: string; type: string }): string {
  return [row.drug, row.test, row.matrix, row.type].join("|");
}

export function toggleSelection(state: SearchState, id: string): SearchState {
  const selection = state.selection.includes(id)
    ? state.selection.filter((s) => s !== id)
    : [...state.selection, id];
  return { ...state, selection };
}
