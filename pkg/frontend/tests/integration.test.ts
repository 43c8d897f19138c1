// Full loop against the real register service: load, filter, explore a
// what-if horizon, and record an override. The service is the one the
// dashboard ships against, not a mock.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { RegisterApi } from '../src/api.js';
import { filterEntries } from '../src/state.js';
import { renderDiffPanel, renderRow } from '../src/render.js';
import type { ScenarioResponse } from '../src/types.js';

const PYTHON = process.env.QER_PYTHON ?? 'python3';

let workdir: string;
let server: ChildProcess | null = null;
let baseUrl = '';
let api: RegisterApi;

function buildRegister(dir: string): void {
  const code = [
    'from qer.sampledata import build_sample_entries, sample_scenario',
    'from qer.store import RegisterStore',
    `store = RegisterStore(${JSON.stringify(dir)})`,
    'store.commit(build_sample_entries(), sample_scenario(), parent=None)',
  ].join('\n');
  const result = spawnSync(PYTHON, ['-c', code], { encoding: 'utf-8' });
  if (result.status !== 0) {
    throw new Error(`register build failed: ${result.stderr}`);
  }
}

async function startServer(dir: string): Promise<string> {
  const child = spawn(
    PYTHON,
    ['-m', 'qer.cli', 'serve', '--register', dir, '--bind', '127.0.0.1:0'],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  server = child;
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('service did not start')), 15000);
    let buffered = '';
    child.stdout!.on('data', (chunk: Buffer) => {
      buffered += chunk.toString();
      const match = buffered.match(/on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    child.stderr!.on('data', () => undefined);
    child.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with ${code}`));
    });
  });
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), 'qer-dashboard-'));
  buildRegister(workdir);
  baseUrl = await startServer(workdir);
  api = new RegisterApi(baseUrl);
  // Service is up once /versions answers.
  for (let attempt = 0; attempt < 50; attempt++) {
    try {
      await api.versions();
      return;
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error('service never became ready');
}, 30000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe('dashboard against the live service', () => {
  it('loads the fixture register', async () => {
    const versions = await api.versions();
    expect(versions).toHaveLength(1);
    expect(versions[0]!.t_threat).toBe(8);
    const entries = await api.entries(1);
    expect(entries).toHaveLength(12);
  });

  it('filter exposure=Borderline isolates QER-010', async () => {
    const entries = await api.entries(1);
    const borderline = filterEntries(entries, {
      wave: null,
      exposure: 'BORDERLINE',
      evidence: null,
    });
    expect(borderline.map((e) => e.qer_id)).toEqual(['QER-010']);
  });

  it('scenario slider produces the same diff as the API oracle', async () => {
    // What the dashboard renders after the slider settles on 20y…
    const viaClient = await api.scenario(20);
    const panel = renderDiffPanel(viaClient, 8);

    // …must equal a rendering of an independent direct call (the oracle).
    const oracleResponse = await fetch(`${baseUrl}/scenario`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ t_threat: 20 }),
    });
    const oracle = (await oracleResponse.json()) as ScenarioResponse;
    expect(renderDiffPanel(oracle, 8)).toBe(panel);

    // And the content is the known horizon-20 picture: one borderline survivor.
    expect(oracle.exposure_counts).toEqual({ YES: 0, BORDERLINE: 1, NO: 11 });
    const ids = oracle.changes.map((c) => c.qer_id);
    expect(ids).toContain('QER-005');
    expect(panel).toContain('QER-005');
  });

  it('scenario exploration is read-only', async () => {
    const before = (await api.versions()).length;
    for (const horizon of [5, 12, 20, 30]) {
      await api.scenario(horizon);
    }
    expect((await api.versions()).length).toBe(before);
  });

  it('override with rationale creates a visible new version', async () => {
    const versionsBefore = await api.versions();
    const latest = versionsBefore[versionsBefore.length - 1]!.version_id;
    const result = await api.override(
      latest,
      'QER-001',
      2,
      'Risk Committee',
      'pilot the signing service first',
    );
    expect(result.version_id).toBe(latest + 1);

    const versionsAfter = await api.versions();
    expect(versionsAfter.length).toBe(versionsBefore.length + 1);

    const entries = await api.entries(result.version_id);
    const identity = entries.find((e) => e.qer_id === 'QER-001')!;
    expect(identity.assigned_wave).toBe(2);
    expect(identity.priority.algorithmic_wave).toBe(1);
    const row = renderRow(identity);
    expect(row).toContain('overridden'); // the badge the committee sees
  });

  it('empty rationale is rejected by the service', async () => {
    const versions = await api.versions();
    const latest = versions[versions.length - 1]!.version_id;
    await expect(api.override(latest, 'QER-002', 3, 'Risk Committee', '  ')).rejects.toMatchObject(
      { code: 'BAD_INPUT' },
    );
  });
});
