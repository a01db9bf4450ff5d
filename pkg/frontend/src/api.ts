/** Thin fetch client for the editing service.
 *
 * The scene document travels as raw text: the server's serialization is
 * canonical, and keeping the bytes lets the mirror invariant be checked
 * byte-for-byte against GET /scene.
 */

import type { CatalogListing, ExportResult, Mutation } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export interface PatchOk {
  ok: true;
  sceneText: string;
}

export interface PatchRejected {
  ok: false;
  status: number;
  error: string;
}

export type PatchOutcome = PatchOk | PatchRejected;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async getSceneText(): Promise<string> {
    const r = await this.fetchFn(this.url("/scene"));
    if (!r.ok) throw new ApiError(r.status, `GET /scene failed: ${r.status}`);
    return await r.text();
  }

  async getRender(): Promise<Uint8Array> {
    const r = await this.fetchFn(this.url("/render"));
    if (!r.ok) throw new ApiError(r.status, `GET /render failed: ${r.status}`);
    return new Uint8Array(await r.arrayBuffer());
  }

  async getCatalog(): Promise<CatalogListing> {
    const r = await this.fetchFn(this.url("/catalog"));
    if (!r.ok) throw new ApiError(r.status, `GET /catalog failed: ${r.status}`);
    return (await r.json()) as CatalogListing;
  }

  /** PATCH one component; resolves to the acknowledged canonical document
   * or the server's rejection (never thrown: rejections are UI states). */
  async patchComponent(componentId: string, mutation: Mutation): Promise<PatchOutcome> {
    const r = await this.fetchFn(this.url(`/scene/component/${componentId}`), {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(mutation),
    });
    const text = await r.text();
    if (r.ok) return { ok: true, sceneText: text };
    let message = text;
    try {
      message = (JSON.parse(text) as { error?: string }).error ?? text;
    } catch {
      /* non-JSON error body; keep raw text */
    }
    return { ok: false, status: r.status, error: message };
  }

  async exportScene(paths?: { scene_path?: string; png_path?: string }): Promise<ExportResult> {
    const r = await this.fetchFn(this.url("/export"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(paths ?? {}),
    });
    if (!r.ok) throw new ApiError(r.status, `POST /export failed: ${r.status}`);
    return (await r.json()) as ExportResult;
  }
}
