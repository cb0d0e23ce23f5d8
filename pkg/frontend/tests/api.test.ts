import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { BANDS, FORCED_FIT, SONG, mockFetch } from "./fixtures.js";

const BASE = "http://api.test";

describe("ApiClient", () => {
  it("hits the documented endpoints with JSON bodies", async () => {
    const { fetch, calls } = mockFetch({
      "GET /health": { status: "ok" },
      "GET /songs": { songs: ["syn-001"] },
      "GET /songs/syn-001/curves": SONG,
      "GET /fits/fit-forced01": FORCED_FIT,
      "GET /fits/fit-null01/predictive?quantiles=0.05,0.5,0.95": BANDS,
      "POST /fit/forced": { job_id: "job-0001" },
    });
    const client = new ApiClient(BASE, fetch);

    expect((await client.health()).status).toBe("ok");
    expect((await client.listSongs()).songs).toEqual(["syn-001"]);
    expect((await client.songCurves("syn-001")).horizon).toBe(8);
    expect((await client.getFit("fit-forced01")).kind).toBe("forced");
    expect(
      (await client.predictive("fit-null01", [0.05, 0.5, 0.95])).quantiles,
    ).toEqual([0.05, 0.5, 0.95]);
    const job = await client.submitFit("forced", { song_id: "syn-001", seed: 3 });
    expect(job.job_id).toBe("job-0001");

    const post = calls.find((c) => c.method === "POST");
    expect(post?.url).toBe(`${BASE}/fit/forced`);
    expect(post?.body).toEqual({ song_id: "syn-001", seed: 3 });
  });

  it("surfaces service errors with their status and message", async () => {
    const { fetch } = mockFetch({
      "GET /fits/nope": () =>
        new Response(JSON.stringify({ error: "fits/nope not found" }), {
          status: 404,
        }),
    });
    const client = new ApiClient(BASE, fetch);
    await expect(client.getFit("nope")).rejects.toThrowError(ApiError);
    await expect(client.getFit("nope")).rejects.toMatchObject({
      status: 404,
      message: "fits/nope not found",
    });
  });

  it("polls jobs until done", async () => {
    let polls = 0;
    const { fetch } = mockFetch({
      "GET /jobs/job-0001": () => {
        polls += 1;
        return polls < 3
          ? { job_id: "job-0001", status: "running" }
          : { job_id: "job-0001", status: "done", result: { fit_id: "fit-x" } };
      },
    });
    const client = new ApiClient(BASE, fetch);
    const status = await client.waitForJob("job-0001", {
      sleep: async () => {},
    });
    expect(status.status).toBe("done");
    expect(polls).toBe(3);
  });

  it("rejects when a job fails", async () => {
    const { fetch } = mockFetch({
      "GET /jobs/job-0002": { job_id: "job-0002", status: "failed", error: "boom" },
    });
    const client = new ApiClient(BASE, fetch);
    await expect(
      client.waitForJob("job-0002", { sleep: async () => {} }),
    ).rejects.toMatchObject({ message: "boom" });
  });
});
