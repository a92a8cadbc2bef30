// Small immutable app-state container; every mutation returns a new state
// so the UI can re-render wholesale (the server owns all real state).

import type { FinalReport } from './types.js';

export interface ChatEntry {
  who: 'you' | 'assistant';
  text: string;
}

export interface AppState {
  report: FinalReport | null;
  session: string | null;
  notebookVersion: number;
  chat: ChatEntry[];
  banner: string | null;
  toast: string | null;
}

export function initialState(): AppState {
  return { report: null, session: null, notebookVersion: 0, chat: [], banner: null, toast: null };
}

export function withReport(state: AppState, report: FinalReport): AppState {
  return {
    ...state,
    report,
    session: report.report_id,
    notebookVersion: report.notebook_version,
    chat: [],
    banner: null,
    toast: null,
  };
}

export function withBanner(state: AppState, banner: string): AppState {
  return { ...state, banner };
}

export function withToast(state: AppState, toast: string | null): AppState {
  return { ...state, toast };
}

export function withChatMessage(state: AppState, entry: ChatEntry): AppState {
  return { ...state, chat: [...state.chat, entry] };
}

export function withNotebookVersion(state: AppState, version: number): AppState {
  return { ...state, notebookVersion: version };
}

// optimistic badge bump for feedback submissions; rolled back on error
export function optimisticBump(state: AppState): AppState {
  return { ...state, notebookVersion: state.notebookVersion + 1 };
}

export function rollbackBump(state: AppState, previous: number): AppState {
  return { ...state, notebookVersion: previous };
}
