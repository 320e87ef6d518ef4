/**
 * Pure HTML renderers. No DOM access, no network: every function maps data
 * to a markup string, which keeps them unit-testable without a browser.
 *
 * Below/above-tolerance classification comes exclusively from the API's
 * below_tolerance flag; values are re-parsed here only to size comparison
 * bars for display.
 */

import { ApiRecord } from "./api.js";
import { recordId } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function rowClass(row: ApiRecord): string {
  if (row.below_tolerance === true) return "below-tolerance";
  if (row.below_tolerance === false) return "above-tolerance";
  return "no-tolerance";
}

function indicator(row: ApiRecord): string {
  if (row.below_tolerance === true) return '<span class="badge ok">below tolerance</span>';
  if (row.below_tolerance === false) return '<span class="badge warn">above tolerance</span>';
  return '<span class="badge none">no tolerance on file</span>';
}

export function renderResultsTable(rows: ApiRecord[], selection: string[]): string {
  if (rows.length === 0) {
    return '<p class="empty-state">No tests found for this search.</p>';
  }
  const body = rows
    .map((row) => {
      const id = recordId(row);
      const checked = selection.includes(id) ? " checked" : "";
      return (
        `<tr class="${rowClass(row)}">` +
        `<td><input type="checkbox" class="compare-pick" data-id="${escapeHtml(id)}"${checked}></td>` +
        `<td>${escapeHtml(row.drug)}</td>` +
        `<td>${escapeHtml(row.test)}${row.type ? ` <em>(${escapeHtml(row.type)})</em>` : ""}</td>` +
        `<td>${escapeHtml(row.matrix)}</td>` +
        `<td>${escapeHtml(row.sensitivity)}</td>` +
        `<td>${escapeHtml(row.tolerance)}</td>` +
        `<td>${escapeHtml(row.mrl)}</td>` +
        `<td>${indicator(row)}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    '<table class="results">' +
    "<thead><tr><th></th><th>Drug</th><th>Test</th><th>Matrix</th>" +
    "<th>Sensitivity</th><th>Tolerance</th><th>MRL</th><th></th></tr></thead>" +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderPager(page: number, total: number, pageSize: number): string {
  const pages = Math.max(1, Math.ceil(total / pageSize));
  const prev = page > 0 ? '<button id="prev-page">Previous</button>' : "";
  const next = page + 1 < pages ? '<button id="next-page">Next</button>' : "";
  return `<nav class="pager">${prev}<span>page ${page + 1} of ${pages} (${total} records)</span>${next}</nav>`;
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="error-banner" role="alert">${escapeHtml(message)} ` +
    '<button id="retry">Retry</button></div>'
  );
}

export function renderFieldErrors(fields: string[]): string {
  return `<p class="field-error">Invalid value for: ${fields.map(escapeHtml).join(", ")}</p>`;
}

/** ppb value range parsed from a display string, for bar sizing only. */
export function parseDisplayRange(text: string): { low: number; high: number } | null {
  const m = /^([\d.]+)(?:\s*(?:to|-|–)\s*([\d.]+))?\s*(ppb|ppm)?$/i.exec(text.trim());
  if (!m) return null;
  const factor = (m[3] ?? "ppb").toLowerCase() === "ppm" ? 1000 : 1;
  const low = Number(m[1]) * factor;
  const high = (m[2] ? Number(m[2]) : Number(m[1])) * factor;
  if (!Number.isFinite(low) || !Number.isFinite(high)) return null;
  return { low, high };
}

export function renderComparePanel(selected: ApiRecord[]): string {
  if (selected.length < 2) {
    return '<p class="compare-hint">Select at least two tests of one drug to compare.</p>';
  }
  const drugs = new Set(selected.map((r) => r.drug));
  if (drugs.size > 1) {
    return (
      '<p class="compare-invalid">Comparison needs a single drug; selection spans: ' +
      [...drugs].map(escapeHtml).join(", ") +
      "</p>"
    );
  }
  const drug = selected[0].drug;
  const ranges = selected.map((r) => parseDisplayRange(r.sensitivity));
  const tolRange = parseDisplayRange(selected[0].tolerance);
  const scaleMax = Math.max(
    tolRange?.high ?? 0,
    ...ranges.map((r) => r?.high ?? 0),
    1
  );
  const bars = selected
    .map((row, i) => {
      const range = ranges[i];
      if (!range) {
        return `<div class="compare-row"><span class="label">${escapeHtml(row.test)}</span>` +
          '<span class="row-warning">cannot normalize units for display</span></div>';
      }
      const left = (100 * range.low) / scaleMax;
      const width = Math.max(1, (100 * (range.high - range.low)) / scaleMax);
      return (
        `<div class="compare-row ${rowClass(row)}">` +
        `<span class="label">${escapeHtml(row.test)}</span>` +
        `<span class="track"><span class="bar" style="left:${left.toFixed(1)}%;width:${width.toFixed(1)}%"></span>` +
        (tolRange
          ? `<span class="tolerance-line" style="left:${((100 * tolRange.low) / scaleMax).toFixed(1)}%"></span>`
          : "") +
        "</span>" +
        `<span class="value">${escapeHtml(row.sensitivity)}</span>` +
        "</div>"
      );
    })
    .join("");
  const tolLabel = selected[0].tolerance
    ? `tolerance ${escapeHtml(selected[0].tolerance)}`
    : "no tolerance on file";
  return (
    `<div class="compare-panel"><h2>${escapeHtml(drug)} (${tolLabel})</h2>${bars}</div>`
  );
}
