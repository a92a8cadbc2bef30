import { describe, expect, it } from 'vitest';

import {
  initialState,
  optimisticBump,
  rollbackBump,
  withChatMessage,
  withNotebookVersion,
  withReport,
} from '../src/state.js';
import type { FinalReport } from '../src/types.js';

const report = {
  schema_version: 1,
  report_id: 'r42',
  status: 'completed',
  task: { kind: 'prediction', goal: 'g', horizon_years: 3, patient_id: 'P1' },
  consensus: null,
  modalities: [],
  exploration: null,
  steps: [],
  notebook_version: 5,
  errors: [],
} as FinalReport;

describe('app state', () => {
  it('loading a report binds the chat session and badge version', () => {
    const s = withReport(initialState(), report);
    expect(s.session).toBe('r42');
    expect(s.notebookVersion).toBe(5);
    expect(s.chat).toEqual([]);
  });

  it('reload from server data reproduces the identical state', () => {
    const a = withReport(initialState(), report);
    const b = withReport(initialState(), report);
    expect(a).toEqual(b);
  });

  it('optimistic bump rolls back cleanly on error', () => {
    let s = withReport(initialState(), report);
    const before = s.notebookVersion;
    s = optimisticBump(s);
    expect(s.notebookVersion).toBe(before + 1);
    s = rollbackBump(s, before);
    expect(s.notebookVersion).toBe(before);
  });

  it('accepted feedback pins the server version', () => {
    let s = withReport(initialState(), report);
    s = optimisticBump(s);
    s = withNotebookVersion(s, 6);
    expect(s.notebookVersion).toBe(6);
  });

  it('chat messages append immutably', () => {
    const s0 = withReport(initialState(), report);
    const s1 = withChatMessage(s0, { who: 'you', text: 'hi' });
    expect(s0.chat.length).toBe(0);
    expect(s1.chat.length).toBe(1);
  });
});
