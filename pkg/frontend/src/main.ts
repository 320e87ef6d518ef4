/** DOM wiring: reads state from the URL, drives searches, writes state back. */

import { ApiError, ApiRecord, RecordsClient } from "./api.js";
import {
  PAGE_SIZE,
  SearchState,
  fromQueryString,
  recordId,
  toQueryString,
  toggleSelection,
} from "./state.js";
import {
  renderComparePanel,
  renderErrorBanner,
  renderFieldErrors,
  renderPager,
  renderResultsTable,
} from "./render.js";

const client = new RecordsClient("..");

let state: SearchState = fromQueryString(window.location.search);
let lastRows: ApiRecord[] = [];
const selectedRows = new Map<string, ApiRecord>();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function syncUrl(): void {
  const query = toQueryString(state);
  const url = query ? `?${query}` : window.location.pathname;
  window.history.replaceState(null, "", url);
}

function syncInputs(): void {
  for (const field of ["drug", "matrix", "species", "test", "manufacturer"] as const) {
    el<HTMLInputElement>(`filter-${field}`).value = state[field];
  }
  el<HTMLInputElement>("filter-below").checked = state.belowToleranceOnly;
}

function renderCompare(): void {
  const selected = state.selection
    .map((id) => selectedRows.get(id))
    .filter((r): r is ApiRecord => r !== undefined);
  el("compare").innerHTML = renderComparePanel(selected);
}

async function runSearch(): Promise<void> {
  syncUrl();
  el("status").innerHTML = '<p class="loading">Searching…</p>';
  let body;
  try {
    body = await client.search(state);
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") return;
    if (err instanceof ApiError && err.status === 400) {
      el("status").innerHTML = renderFieldErrors(err.fields);
      return;
    }
    el("status").innerHTML = renderErrorBanner("The record service is unreachable.");
    el("retry")?.addEventListener("click", () => void runSearch());
    return;
  }
  lastRows = body.rows;
  for (const row of body.rows) selectedRows.set(recordId(row), row);
  el("status").innerHTML = "";
  el("results").innerHTML =
    renderResultsTable(body.rows, state.selection) +
    renderPager(state.page, body.total, PAGE_SIZE);
  wireResultHandlers();
  renderCompare();
}

function wireResultHandlers(): void {
  for (const box of document.querySelectorAll<HTMLInputElement>(".compare-pick")) {
    box.addEventListener("change", () => {
      state = toggleSelection(state, box.dataset.id ?? "");
      syncUrl();
      renderCompare();
    });
  }
  document.getElementById("prev-page")?.addEventListener("click", () => {
    state = { ...state, page: state.page - 1 };
    void runSearch();
  });
  document.getElementById("next-page")?.addEventListener("click", () => {
    state = { ...state, page: state.page + 1 };
    void runSearch();
  });
}

function wireFilters(): void {
  for (const field of ["drug", "matrix", "species", "test", "manufacturer"] as const) {
    el<HTMLInputElement>(`filter-${field}`).addEventListener("input", (event) => {
      state = { ...state, [field]: (event.target as HTMLInputElement).value, page: 0 };
      void runSearch();
    });
  }
  el<HTMLInputElement>("filter-below").addEventListener("change", (event) => {
    state = {
      ...state,
      belowToleranceOnly: (event.target as HTMLInputElement).checked,
      page: 0,
    };
    void runSearch();
  });
  el("clear-selection").addEventListener("click", () => {
    state = { ...state, selection: [] };
    syncUrl();
    el("results").innerHTML = renderResultsTable(lastRows, state.selection);
    wireResultHandlers();
    renderCompare();
  });
}

window.addEventListener("popstate", () => {
  state = fromQueryString(window.location.search);
  syncInputs();
  void runSearch();
});

async function boot(): Promise<void> {
  syncInputs();
  wireFilters();
  try {
    const dicts = await client.dictionaries();
    el("drug-options").innerHTML = dicts.drugs
      .map((d) => `<option value="${d}"></option>`)
      .join("");
  } catch {
    // datalist suggestions are a nicety; searching works without them
  }
  await runSearch();
}

void boot();
