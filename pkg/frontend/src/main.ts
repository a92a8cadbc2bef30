// DOM wiring: thin event-delegation layer over the pure renderers.

import { ApiClient, ApiError } from './api.js';
import {
  renderAssessmentView,
  renderChatThread,
  renderConflict,
  renderErrorBanner,
  renderNotebookBadge,
  renderOfflineBanner,
  renderPatientOptions,
  renderToast,
} from './render.js';
import {
  AppState,
  initialState,
  optimisticBump,
  rollbackBump,
  withBanner,
  withChatMessage,
  withNotebookVersion,
  withReport,
  withToast,
} from './state.js';

const api = new ApiClient('');
let state: AppState = initialState();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function paint(): void {
  $('badge-slot').innerHTML = renderNotebookBadge(state.notebookVersion);
  $('banner-slot').innerHTML = state.banner ? renderErrorBanner(state.banner) : '';
  $('toast-slot').innerHTML = state.toast ? renderToast(state.toast) : '';
  $('report-slot').innerHTML = state.report ? renderAssessmentView(state.report) : '<p class="hint">Pick a patient and run an assessment.</p>';
  $('chat-thread').innerHTML = renderChatThread(state.chat);
  const chatSection = $('chat-section');
  chatSection.style.display = state.session ? 'block' : 'none';
  const feedbackSection = $('feedback-section');
  feedbackSection.style.display = state.report ? 'block' : 'none';
}

async function loadPatients(): Promise<void> {
  try {
    const { patients } = await api.patients();
    ($('patient-select') as HTMLSelectElement).innerHTML = renderPatientOptions(patients);
  } catch (e) {
    state = withBanner(state, e instanceof ApiError && e.status === 0 ? 'service unreachable' : String(e));
    paint();
  }
}

async function runAssessment(): Promise<void> {
  const select = $('patient-select') as HTMLSelectElement;
  const horizon = parseInt(($('horizon-select') as HTMLSelectElement).value, 10);
  if (!select.value) return;
  $('assess-button').setAttribute('disabled', 'true');
  try {
    const report = await api.assess(select.value, 'prediction', horizon);
    state = withReport(state, report);
  } catch (e) {
    if (e instanceof ApiError && e.status === 0) {
      $('banner-slot').innerHTML = renderOfflineBanner();
      return;
    }
    state = withBanner(state, e instanceof ApiError ? `${e.code}: ${e.message}` : String(e));
  } finally {
    $('assess-button').removeAttribute('disabled');
  }
  paint();
}

async function sendChat(): Promise<void> {
  const input = $('chat-input') as HTMLInputElement;
  const message = input.value.trim();
  if (!message || !state.session) return; // empty messages blocked client-side
  input.value = '';
  state = withChatMessage(state, { who: 'you', text: message });
  paint();
  try {
    const resp = await api.chat(state.session, message);
    state = withChatMessage(state, { who: 'assistant', text: resp.reply });
  } catch (e) {
    state = withChatMessage(state, { who: 'assistant', text: `error: ${String(e)}` });
  }
  paint();
}

async function submitFeedback(): Promise<void> {
  const text = ($('feedback-text') as HTMLTextAreaElement).value.trim();
  const direction = ($('feedback-direction') as HTMLSelectElement).value as 'higher' | 'lower';
  if (!text || !state.report) return;
  const previous = state.notebookVersion;
  state = optimisticBump(state);
  paint();
  try {
    const resp = await api.feedback(state.report.report_id, text, direction);
    state = withNotebookVersion(state, resp.notebook_version);
    if (resp.status === 'duplicate') {
      state = withToast(state, 'already known: existing guidance covers this');
    } else if (resp.status === 'conflict' && resp.conflicting) {
      $('conflict-slot').innerHTML = renderConflict(resp.conflicting);
      state = withToast(state, 'conflicts with existing guidance');
    } else if (resp.status === 'accepted') {
      state = withToast(state, 'feedback recorded');
      ($('feedback-text') as HTMLTextAreaElement).value = '';
      $('conflict-slot').innerHTML = '';
    }
  } catch (e) {
    state = rollbackBump(state, previous);
    state = withToast(state, `feedback failed: ${String(e)}`);
  }
  paint();
}

function onCitationClick(event: Event): void {
  const target = event.target as HTMLElement;
  if (!target.classList.contains('citation')) return;
  event.preventDefault();
  const id = target.getAttribute('data-evidence');
  if (!id) return;
  const el = document.getElementById(`evidence-${id}`);
  if (el) {
    el.scrollIntoView({ behavior: 'smooth', block: 'center' });
    el.classList.add('highlight');
    setTimeout(() => el.classList.remove('highlight'), 1500);
  }
}

export function boot(): void {
  paint();
  void loadPatients();
  $('assess-button').addEventListener('click', () => void runAssessment());
  $('chat-send').addEventListener('click', () => void sendChat());
  ($('chat-input') as HTMLInputElement).addEventListener('keydown', (e) => {
    if ((e as KeyboardEvent).key === 'Enter') void sendChat();
  });
  $('feedback-submit').addEventListener('click', () => void submitFeedback());
  document.addEventListener('click', onCitationClick);
}

if (typeof document !== 'undefined' && document.getElementById('report-slot')) {
  boot();
}
