import { describe, expect, it } from 'vitest';

import {
  clampRisk,
  escapeHtml,
  renderAssessmentView,
  renderChatMessage,
  renderConflict,
  renderErrorBanner,
  renderModalityPanel,
  renderNotebookBadge,
  renderPatientOptions,
  renderRiskSummary,
  riskLevelLabel,
} from '../src/render.js';
import type { FinalReport, ModalityResult } from '../src/types.js';

function fullReport(): FinalReport {
  return {
    schema_version: 1,
    report_id: 'abc123def456',
    status: 'completed',
    task: { kind: 'prediction', goal: 'g', horizon_years: 3, patient_id: 'P000001' },
    consensus: {
      risk: 0.62,
      confidence: 0.8,
      rationale: 'Review of the argument: multiple direct findings.',
      bounds: { min_modality_risk: 0.4, max_modality_risk: 0.7 },
    },
    modalities: [
      {
        modality: 'ehr',
        risk: 0.7,
        evidence: [
          { id: 'ehr-1', item: 'Memory deficit observed', weight: 0.9, polarity: 'positive', source_date: null },
        ],
      },
      {
        modality: 'note',
        risk: 0.5,
        evidence: [
          { id: 'note-1', item: 'Progressive memory loss reported', weight: 0.4, polarity: 'positive', source_date: '2020-01-01' },
        ],
      },
      {
        modality: 'image',
        risk: 0.4,
        evidence: [
          { id: 'image-1', item: 'hippocampus_left (z=-1.90) indicates elevated risk', weight: 0.5, polarity: 'positive', source_date: '2019-06-01' },
        ],
      },
    ],
    exploration: null,
    steps: [{ agent: 'data', sub_goal: 's', result_summary: 'record retrieved', command_trace: 'execution = agent.execute()' }],
    notebook_version: 3,
    errors: [],
  };
}

describe('escapeHtml', () => {
  it('neutralizes markup', () => {
    expect(escapeHtml('<script>alert("x")</script>')).not.toContain('<script>');
    expect(escapeHtml("a & 'b'")).toBe('a &amp; &#39;b&#39;');
  });
});

describe('risk display', () => {
  it('clamps to [0, 1]', () => {
    expect(clampRisk(1.7)).toBe(1);
    expect(clampRisk(-0.2)).toBe(0);
  });

  it('labels risk bands', () => {
    expect(riskLevelLabel(0.9)).toBe('High risk');
    expect(riskLevelLabel(0.5)).toBe('Moderate risk');
    expect(riskLevelLabel(0.1)).toBe('Low risk');
  });

  it('renders gauge width from clamped risk', () => {
    const report = fullReport();
    report.consensus!.risk = 1.4; // display must clamp
    const html = renderRiskSummary(report);
    expect(html).toContain('width:100.0%');
  });

  it('shows bounds and confidence', () => {
    const html = renderRiskSummary(fullReport());
    expect(html).toContain('0.400');
    expect(html).toContain('0.700');
    expect(html).toContain('confidence 0.80');
  });
});

describe('modality panels', () => {
  it('renders all three panels with evidence anchors', () => {
    const html = renderAssessmentView(fullReport());
    for (const mod of ['ehr', 'note', 'image']) {
      expect(html).toContain(`data-modality="${mod}"`);
    }
    expect(html).toContain('id="evidence-ehr-1"');
    expect(html).toContain('id="evidence-note-1"');
    expect(html).toContain('id="evidence-image-1"');
  });

  it('marks unavailable modality distinctly', () => {
    const mod: ModalityResult = { modality: 'image', unavailable: true, reason: 'no imaging study' };
    const html = renderModalityPanel(mod);
    expect(html).toContain('panel-unavailable');
    expect(html).toContain('unavailable: no imaging study');
    expect(html).not.toContain('risk 0');
  });

  it('colors polarity classes', () => {
    const html = renderAssessmentView(fullReport());
    expect(html).toContain('polarity-positive');
  });
});

describe('chat rendering', () => {
  it('linkifies citations for deep links', () => {
    const html = renderChatMessage('assistant', 'driven by [ehr-1] and [note-1].');
    expect(html).toContain('href="#evidence-ehr-1"');
    expect(html).toContain('data-evidence="note-1"');
  });

  it('keeps markup-safe text', () => {
    const html = renderChatMessage('assistant', '<img onerror=alert(1)>');
    expect(html).not.toContain('<img');
  });
});

describe('notebook widgets', () => {
  it('renders the version badge', () => {
    expect(renderNotebookBadge(4)).toContain('notebook v4');
  });

  it('renders conflict entries side by side', () => {
    const html = renderConflict([
      { entry_id: 'nb-1', text: 'diabetes raises risk', factors: ['diabetes'], direction: 'higher', provenance: 'clinician_feedback', created_version: 1 },
      { entry_id: 'nb-2', text: 'diabetes lowers risk', factors: ['diabetes'], direction: 'lower', provenance: 'clinician_feedback', created_version: 2 },
    ]);
    expect(html).toContain('higher');
    expect(html).toContain('lower');
    expect((html.match(/conflict-entry/g) ?? []).length).toBe(2);
  });
});

describe('error states', () => {
  it('error banner is distinct markup, not a zero risk', () => {
    const html = renderErrorBanner('service unreachable');
    expect(html).toContain('role="alert"');
    expect(html).not.toContain('risk');
  });
});

describe('patient options', () => {
  it('lists modality availability', () => {
    const html = renderPatientOptions([
      { patient_id: 'P000001', modalities: { ehr: true, note: true, image: false } },
    ]);
    expect(html).toContain('P000001 (ehr+note)');
  });
});
