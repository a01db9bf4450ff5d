/** Editor state and the mutation pipeline.
 *
 * The scene mirror holds exactly the last server-acknowledged document text;
 * optimistic updates are forbidden, so the UI can never display a scene the
 * server has not validated. Mutations are sent one at a time with at most
 * one queued follower (newest wins, which coalesces drag streams), spaced by
 * the throttle interval to respect the serial-writer contract. Every
 * acknowledged PATCH is appended to a log; replaying the log against a
 * fresh service reproduces the final document byte-for-byte.
 */

import { ApiClient } from "./api.js";
import type {
  CatalogListing,
  Mutation,
  PatchLogEntry,
  SceneComponent,
  SceneDoc,
} from "./types.js";

export interface EditorState {
  connected: boolean;
  sceneText: string | null;
  scene: SceneDoc | null;
  catalog: CatalogListing | null;
  selection: string | null;
  pendingMutation: boolean;
  lastRender: Uint8Array | null;
  error: string | null;
}

const sleep = (ms: number) => new Promise<void>((res) => setTimeout(res, ms));

export class EditorController {
  state: EditorState = {
    connected: false,
    sceneText: null,
    scene: null,
    catalog: null,
    selection: null,
    pendingMutation: false,
    lastRender: null,
    error: null,
  };

  readonly patchLog: PatchLogEntry[] = [];
  onChange: (state: EditorState) => void = () => {};

  private inflight: Promise<void> | null = null;
  private queued: PatchLogEntry | null = null;
  private lastSend = 0;

  constructor(
    private api: ApiClient,
    private throttleMs = 100,
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private acceptScene(text: string): void {
    this.state.sceneText = text;
    this.state.scene = JSON.parse(text) as SceneDoc;
  }

  component(id: string): SceneComponent | undefined {
    return this.state.scene?.components.find((c) => c.id === id);
  }

  async load(): Promise<void> {
    try {
      const [text, render, catalog] = await Promise.all([
        this.api.getSceneText(),
        this.api.getRender(),
        this.api.getCatalog(),
      ]);
      this.acceptScene(text);
      this.state.lastRender = render;
      this.state.catalog = catalog;
      this.state.connected = true;
      this.state.error = null;
    } catch (e) {
      this.state.connected = false;
      this.state.error = `service unreachable: ${String(e)}`;
    }
    this.emit();
  }

  select(id: string | null): void {
    this.state.selection = id;
    this.emit();
  }

  /** Queue a mutation; drag streams coalesce to the newest value. */
  mutate(componentId: string, mutation: Mutation): Promise<void> {
    this.queued = { componentId, mutation };
    if (!this.inflight) {
      this.inflight = this.drain().finally(() => {
        this.inflight = null;
      });
    }
    return this.inflight;
  }

  /** Wait until the queue is empty and the last render is fetched. */
  async settled(): Promise<void> {
    while (this.inflight) {
      await this.inflight;
    }
  }

  private async drain(): Promise<void> {
    while (this.queued) {
      const entry = this.queued;
      this.queued = null;
      const wait = this.lastSend + this.throttleMs - Date.now();
      if (wait > 0) await sleep(wait);
      this.state.pendingMutation = true;
      this.emit();
      this.lastSend = Date.now();
      const outcome = await this.api.patchComponent(entry.componentId, entry.mutation);
      if (outcome.ok) {
        // the mirror changes only here, on acknowledgment
        this.acceptScene(outcome.sceneText);
        this.patchLog.push(entry);
        this.state.error = null;
        try {
          this.state.lastRender = await this.api.getRender();
        } catch (e) {
          this.state.error = `render fetch failed: ${String(e)}`;
        }
      } else {
        // rejected: mirror untouched, surface the server's invariant
        this.state.error = outcome.error;
      }
      this.state.pendingMutation = false;
      this.emit();
    }
  }

  // --- gesture helpers: each maps to exactly one PATCH shape ---

  moveBy(componentId: string, dx: number, dy: number): Promise<void> {
    const c = this.component(componentId);
    if (!c) return Promise.resolve();
    return this.mutate(componentId, { center: [c.center[0] + dx, c.center[1] + dy] });
  }

  setScale(componentId: string, scale: number): Promise<void> {
    return this.mutate(componentId, { scale });
  }

  setZ(componentId: string, z: number): Promise<void> {
    return this.mutate(componentId, { z_order: z });
  }

  switchCatalog(componentId: string, category: "ears" | "bodies", index: number): Promise<void> {
    return this.mutate(componentId, { source: { kind: "catalog", category, index } });
  }

  async export(paths?: { scene_path?: string; png_path?: string }) {
    const result = await this.api.exportScene(paths);
    this.emit();
    return result;
  }
}
