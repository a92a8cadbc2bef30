// Pure HTML-string renderers; the DOM layer only swaps innerHTML and
// delegates events, which keeps everything here unit-testable in node.

import type { ChatResponse, FinalReport, ModalityResult, NotebookEntry } from './types.js';

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function clampRisk(risk: number): number {
  return Math.min(1, Math.max(0, risk));
}

export function riskLevelLabel(risk: number): string {
  const r = clampRisk(risk);
  if (r >= 0.66) return 'High risk';
  if (r >= 0.33) return 'Moderate risk';
  return 'Low risk';
}

const MODALITY_TITLES: Record<string, string> = {
  ehr: 'Health record factors',
  note: 'Clinical note evidence',
  image: 'Imaging regions',
};

export function renderRiskSummary(report: FinalReport): string {
  const c = report.consensus;
  if (!c) {
    return `<div class="risk-summary" data-testid="risk-summary"><p>No consensus risk available.</p></div>`;
  }
  const risk = clampRisk(c.risk);
  const pct = (risk * 100).toFixed(1);
  return [
    `<div class="risk-summary" data-testid="risk-summary">`,
    `<div class="risk-gauge"><div class="risk-bar" style="width:${pct}%"></div></div>`,
    `<p class="risk-number">${escapeHtml(pct)}% &middot; ${escapeHtml(riskLevelLabel(risk))}</p>`,
    `<p class="risk-bounds">modality range ${c.bounds.min_modality_risk.toFixed(3)} &ndash; ${c.bounds.max_modality_risk.toFixed(3)}, confidence ${c.confidence.toFixed(2)}</p>`,
    c.fallback ? `<p class="risk-fallback">backend fallback: arithmetic-mean fusion</p>` : '',
    `</div>`,
  ].join('');
}

export function renderModalityPanel(mod: ModalityResult): string {
  const title = MODALITY_TITLES[mod.modality] ?? mod.modality;
  if (mod.unavailable) {
    return [
      `<section class="panel panel-unavailable" data-modality="${mod.modality}">`,
      `<h3>${escapeHtml(title)}</h3>`,
      `<p class="unavailable">unavailable: ${escapeHtml(mod.reason ?? 'no data')}</p>`,
      `</section>`,
    ].join('');
  }
  const items = (mod.evidence ?? [])
    .map(
      (e) =>
        `<li id="evidence-${escapeHtml(e.id)}" class="evidence polarity-${e.polarity}">` +
        `<span class="polarity-dot"></span>${escapeHtml(e.item)}` +
        `<span class="weight">${e.weight >= 0 ? '+' : ''}${e.weight.toFixed(3)}</span>` +
        (e.source_date ? `<span class="date">${escapeHtml(e.source_date)}</span>` : '') +
        `</li>`,
    )
    .join('');
  const riskLine =
    mod.risk === undefined
      ? ''
      : `<p class="modality-risk">risk ${mod.is_cox_score ? 'score' : ''} ${mod.risk.toFixed(3)}</p>`;
  return [
    `<section class="panel" data-modality="${mod.modality}">`,
    `<h3>${escapeHtml(title)}</h3>`,
    riskLine,
    `<ul class="evidence-list">${items}</ul>`,
    `</section>`,
  ].join('');
}

export function renderTranscript(report: FinalReport): string {
  const c = report.consensus;
  const steps = report.steps
    .map(
      (s) =>
        `<li><strong>${escapeHtml(s.agent)}</strong>: ${escapeHtml(s.result_summary)}` +
        (s.command_trace ? `<code class="trace">${escapeHtml(s.command_trace)}</code>` : '') +
        `</li>`,
    )
    .join('');
  const transcript = c?.transcript ? JSON.stringify(c.transcript, null, 1) : '';
  return [
    `<details class="transcript" data-testid="transcript">`,
    `<summary>Discussion transcript and steps</summary>`,
    `<ol>${steps}</ol>`,
    transcript ? `<pre>${escapeHtml(transcript)}</pre>` : '',
    `</details>`,
  ].join('');
}

export function renderSuggestedActions(report: FinalReport): string {
  const rationale = report.consensus?.rationale ?? '';
  if (!rationale) return '';
  return [
    `<section class="panel actions" data-testid="actions">`,
    `<h3>Suggested actions</h3>`,
    `<p>${escapeHtml(rationale)}</p>`,
    `</section>`,
  ].join('');
}

export function renderAssessmentView(report: FinalReport): string {
  const panels = report.modalities.map(renderModalityPanel).join('');
  return [
    renderRiskSummary(report),
    `<div class="panels">${panels}</div>`,
    renderSuggestedActions(report),
    renderTranscript(report),
  ].join('');
}

export function renderErrorBanner(message: string): string {
  return `<div class="banner error" role="alert">${escapeHtml(message)}</div>`;
}

export function renderOfflineBanner(): string {
  return renderErrorBanner('service unreachable; showing nothing rather than stale risk');
}

// chat replies carry [evidence-id] citations; linkify them for deep-linking
export function renderChatMessage(who: 'you' | 'assistant', text: string): string {
  const linked = escapeHtml(text).replace(
    /\[([a-z]+-\d+)\]/g,
    (_m, id: string) => `<a href="#evidence-${id}" class="citation" data-evidence="${id}">[${id}]</a>`,
  );
  return `<div class="chat-message from-${who}"><span class="who">${who}</span><p>${linked}</p></div>`;
}

export function renderChatThread(messages: Array<{ who: 'you' | 'assistant'; text: string }>): string {
  return messages.map((m) => renderChatMessage(m.who, m.text)).join('');
}

export function renderNotebookBadge(version: number): string {
  return `<span class="badge" data-testid="notebook-badge">notebook v${version}</span>`;
}

export function renderConflict(entries: NotebookEntry[]): string {
  const sides = entries
    .map(
      (e) =>
        `<div class="conflict-entry"><span class="direction">${escapeHtml(e.direction)}</span>` +
        `<p>${escapeHtml(e.text)}</p><p class="factors">${e.factors.map(escapeHtml).join(', ')}</p></div>`,
    )
    .join('');
  return `<div class="conflict" data-testid="conflict"><h4>Conflicts with existing guidance</h4>${sides}</div>`;
}

export function renderToast(message: string): string {
  return `<div class="toast">${escapeHtml(message)}</div>`;
}

export function renderPatientOptions(patients: Array<{ patient_id: string; modalities: Record<string, boolean> }>): string {
  return patients
    .map((p) => {
      const mods = Object.entries(p.modalities)
        .filter(([, v]) => v)
        .map(([k]) => k)
        .join('+');
      return `<option value="${escapeHtml(p.patient_id)}">${escapeHtml(p.patient_id)} (${mods})</option>`;
    })
    .join('');
}

export function citationsOf(resp: ChatResponse): string[] {
  return resp.citations;
}
