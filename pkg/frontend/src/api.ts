// HTTP client for the engine API. The web client talks only to this
// server; it never reaches an LLM endpoint directly.

import type {
  ArtifactDoc,
  DatasetPageDoc,
  SessionDoc,
  SessionEntryDoc,
  WireManipulation,
} from "./wire";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let code = "HttpError";
    let message = response.statusText;
    try {
      const body = await response.json();
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, code, message);
  }
  return (await response.json()) as T;
}

export class EngineClient {
  constructor(public baseUrl: string = "http://127.0.0.1:8000") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parse<T>(response);
  }

  private async putJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.url(path), {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parse<T>(response);
  }

  async health(): Promise<{ status: string }> {
    return parse(await fetch(this.url("/health")));
  }

  async models(): Promise<{ models: string[]; default: string }> {
    return parse(await fetch(this.url("/models")));
  }

  async uploadDataset(
    file: File,
    description?: string,
  ): Promise<{ id: string; name: string; rowCount: number }> {
    const form = new FormData();
    form.append("file", file);
    if (description) {
      form.append("description", description);
    }
    const response = await fetch(this.url("/datasets"), {
      method: "POST",
      body: form,
    });
    return parse(response);
  }

  async datasetPage(id: string, page = 0, pageSize = 100): Promise<DatasetPageDoc> {
    const response = await fetch(
      this.url(`/datasets/${id}?page=${page}&page_size=${pageSize}`),
    );
    return parse(response);
  }

  async createSession(datasetId: string): Promise<{ id: string }> {
    return this.postJson("/sessions", { datasetId });
  }

  async getSession(id: string): Promise<SessionDoc> {
    return parse(await fetch(this.url(`/sessions/${id}`)));
  }

  async postTurn(
    sessionId: string,
    nl: string,
    interactions: WireManipulation[],
  ): Promise<SessionEntryDoc> {
    return this.postJson(`/sessions/${sessionId}/turns`, { nl, interactions });
  }

  async editTurn(
    sessionId: string,
    index: number,
    edit: { nl?: string; interactions?: WireManipulation[] },
  ): Promise<SessionEntryDoc> {
    return this.putJson(`/sessions/${sessionId}/turns/${index}`, edit);
  }

  async putCode(sessionId: string, index: number, code: string): Promise<ArtifactDoc> {
    return this.putJson(`/sessions/${sessionId}/turns/${index}/code`, { code });
  }

  async postThumbnail(sessionId: string, index: number, pngBase64: string): Promise<void> {
    await this.postJson(`/sessions/${sessionId}/turns/${index}/thumbnail`, {
      pngBase64,
    });
  }

  async switchModel(sessionId: string, modelId: string): Promise<void> {
    await this.putJson(`/sessions/${sessionId}/model`, { modelId });
  }

  async exportSession(sessionId: string): Promise<Blob> {
    const response = await fetch(this.url(`/sessions/${sessionId}/export`));
    if (!response.ok) {
      throw new ApiError(response.status, "HttpError", response.statusText);
    }
    return response.blob();
  }

  async importSession(archive: Blob): Promise<{ id: string }> {
    const response = await fetch(this.url("/sessions/import"), {
      method: "POST",
      body: archive,
    });
    return parse(response);
  }
}
