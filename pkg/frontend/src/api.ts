/** Client for the label service HTTP API. */

export interface RegionInfo {
  id: string;
  width: number;
  height: number;
  bands: string[];
  revisions: Record<string, number>;
}

export interface LabelPayload {
  width: number;
  height: number;
  revision: number;
  classes: Record<string, string>;
  nodata: number;
  /** base64-encoded uint8 values, row-major */
  data: string;
}

export type LabelLayer = "t1" | "t2" | "change";
export type CompositeBands = "rgb" | "swgb";

export class ConflictError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ConflictError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export function decodeBase64(data: string): Uint8Array {
  if (typeof atob === "function") {
    const binary = atob(data);
    const out = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
    return out;
  }
  return new Uint8Array(Buffer.from(data, "base64"));
}

export function encodeBase64(values: Uint8Array): string {
  if (typeof btoa === "function") {
    let binary = "";
    const chunk = 0x8000;
    for (let i = 0; i < values.length; i += chunk) {
      binary += String.fromCharCode(...values.subarray(i, i + chunk));
    }
    return btoa(binary);
  }
  return Buffer.from(values).toString("base64");
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (resp.status === 409) {
      throw new ConflictError(await resp.text());
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return resp;
  }

  async listRegions(): Promise<RegionInfo[]> {
    const resp = await this.request("/api/regions");
    return (await resp.json()) as RegionInfo[];
  }

  async getLabels(regionId: string, layer: LabelLayer): Promise<LabelPayload> {
    const resp = await this.request(
      `/api/regions/${regionId}/labels?date=${layer}`,
    );
    return (await resp.json()) as LabelPayload;
  }

  async putLabels(
    regionId: string,
    layer: LabelLayer,
    revision: number,
    values: Uint8Array,
  ): Promise<number> {
    const resp = await this.request(
      `/api/regions/${regionId}/labels?date=${layer}`,
      {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ revision, data: encodeBase64(values) }),
      },
    );
    const body = (await resp.json()) as { revision: number };
    return body.revision;
  }

  compositeUrl(regionId: string, date: "t1" | "t2", bands: CompositeBands): string {
    return `${this.baseUrl}/api/regions/${regionId}/composite.png?date=${date}&bands=${bands}`;
  }
}
