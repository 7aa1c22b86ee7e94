/**
 * End-to-end: drive the real services with the UI's own building blocks.
 *
 * A session rebuilt from the dictionary-record fixture publishes through the
 * registry, is served by the gateway, harvested into a union catalog, and
 * found again through the search view's subject-language picker.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer, type AddressInfo } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CatalogClient, RegistryClient } from "../src/api.js";
import { EditorSession } from "../src/editor.js";
import { SearchView } from "../src/search.js";
import { ElementRow } from "../src/oryx.js";

const FIXTURE_ROWS: ElementRow[] = [
  { name: "title", content: "Limbu-English Dictionary" },
  { name: "creator", content: "Michailovsky, Boyd" },
  { name: "date", content: "", code: "2002-05-22", refine: "modified" },
  {
    name: "description",
    content:
      "The XML source for a dictionary of the Limbu language of Nepal, " +
      "consisting of approximately 2,000 entries. (Size: 1.2M)",
  },
  { name: "format", content: "", code: "text/xml" },
  {
    name: "publisher",
    content: "LACITO Project, Centre National de la Recherche Scientifique (CNRS)",
  },
  { name: "language", content: "", code: "en" },
  { name: "subject.language", content: "", code: "x-sil-LIF" },
  { name: "type", content: "", code: "Text" },
  { name: "type.linguistic", content: "", code: "lexicon/dictionary" },
  {
    name: "identifier",
    content: "http://lacito.archivage.vjf.cnrs.fr/archives/Nepal/Limbu/dicoLimbu.xml",
  },
];

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as AddressInfo).port;
      probe.close(() => resolve(port));
    });
  });
}

interface Service {
  child: ChildProcess;
  url: string;
}

const services: Service[] = [];

function startService(args: string[]): Promise<Service> {
  return new Promise((resolve, reject) => {
    const child = spawn("olac", args, { stdio: ["ignore", "pipe", "pipe"] });
    let buffered = "";
    let stderr = "";
    const timer = setTimeout(() => {
      child.kill();
      reject(
        new Error(
          `service never became ready: olac ${args.join(" ")}\n${buffered}${stderr}`,
        ),
      );
    }, 30_000);
    child.stdout?.on("data", (chunk: Buffer) => {
      buffered += chunk.toString("utf-8");
      const match = buffered.match(/serving on (\S+)/);
      if (match !== null) {
        clearTimeout(timer);
        const service = { child, url: match[1] };
        services.push(service);
        resolve(service);
      }
    });
    child.stderr?.on("data", (chunk: Buffer) => {
      stderr += chunk.toString("utf-8");
    });
    child.once("exit", (status) => {
      clearTimeout(timer);
      reject(
        new Error(`service exited with ${status}: olac ${args.join(" ")}\n${stderr}`),
      );
    });
  });
}

function runCli(args: string[]): { status: number; stdout: string; stderr: string } {
  const result = spawnSync("olac", args, { encoding: "utf-8" });
  return {
    status: result.status ?? -1,
    stdout: result.stdout ?? "",
    stderr: result.stderr ?? "",
  };
}

let workDir: string;
let registryUrl: string;
let vocabCatalog: CatalogClient;
let registry: RegistryClient;
let session: EditorSession;
let publishedBody = "";
let publishedBaseUrl = "";

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "webui-e2e-"));
  const [vidaPort, registryPort, vocabPort] = [
    await freePort(),
    await freePort(),
    await freePort(),
  ];
  const vida = await startService(["serve-vida", "--bind", `127.0.0.1:${vidaPort}`]);
  const registryService = await startService([
    "serve-registry",
    "--journal",
    join(workDir, "journal.jsonl"),
    "--bind",
    `127.0.0.1:${registryPort}`,
    "--oryx-dir",
    join(workDir, "oryx"),
    "--vida-url",
    vida.url,
  ]);
  registryUrl = registryService.url;
  // A catalog over an empty store still serves the vocabulary endpoints the
  // editor validates against.
  const vocabService = await startService([
    "serve-catalog",
    "--store",
    join(workDir, "unused-store.json"),
    "--bind",
    `127.0.0.1:${vocabPort}`,
  ]);
  vocabCatalog = new CatalogClient(vocabService.url);
  registry = new RegistryClient(registryUrl);
}, 120_000);

afterAll(() => {
  for (const service of services) {
    service.child.kill();
  }
  rmSync(workDir, { recursive: true, force: true });
});

describe("editor round trip through the running federation", () => {
  it("rebuilds the dictionary record in an editor session", () => {
    session = EditorSession.empty();
    session.setArchiveField("archiveId", "lacito");
    session.setArchiveField("repositoryName", "LACITO Archive");
    session.setArchiveField("curator", "Boyd Michailovsky");
    session.setArchiveField("institution", "Centre National de la Recherche Scientifique");
    const i = session.addRecord("dicoLimbu");
    session.setDatestamp(i, "2002-05-22");
    for (const row of FIXTURE_ROWS) {
      const j = session.addRow(i, row.name);
      session.updateRow(i, j, row);
    }
    expect(session.records[0].elements).toEqual(FIXTURE_ROWS);
    expect(session.dirty).toBe(true);
    expect(session.canPublish).toBe(false);
  });

  it("validates clean against the live vocabulary endpoints", async () => {
    const findings = await session.validate(vocabCatalog);
    expect(findings).toEqual([]);
    expect(session.canPublish).toBe(true);
  });

  it("publishes and comes back registered behind the gateway", async () => {
    const outcome = await session.publish(registry, vocabCatalog);
    expect(outcome.ok).toBe(true);
    if (!outcome.ok) {
      return;
    }
    expect(outcome.records).toBe(1);
    expect(session.publishState).toBe("published");
    expect(session.editToken).not.toBeNull();
    publishedBaseUrl = outcome.baseUrl;
    expect(publishedBaseUrl).toContain("?oryx=");

    const fetched = await registry.fetchPublished(outcome.oryxUrl);
    expect(fetched.status).toBe(200);
    publishedBody = fetched.body;
    expect(publishedBody).toBe(session.toOryx());
  });

  it("published a repository file the validator accepts", () => {
    const path = join(workDir, "published.oryx.xml");
    writeFileSync(path, publishedBody, "utf-8");
    const result = runCli(["validate", path]);
    expect(result.stderr).toBe("");
    expect(result.status).toBe(0);
  });

  it("appears in the registry as a gateway-backed archive", async () => {
    const entries = await registry.archiveList();
    const entry = entries.find((e) => e.id === "lacito");
    expect(entry).toBeDefined();
    expect(entry?.kind).toBe("vida-backed");
    expect(entry?.baseUrl).toBe(publishedBaseUrl);
  });

  it("loads back into an editor session byte for byte", () => {
    const reloaded = EditorSession.fromOryx(publishedBody);
    expect(reloaded.toOryx()).toBe(publishedBody);
  });

  it("is harvested into the union catalog", () => {
    const result = runCli([
      "harvest",
      "--registry",
      registryUrl,
      "--store",
      join(workDir, "store.json"),
      "--ledger",
      join(workDir, "ledger.json"),
    ]);
    expect(result.stderr).toBe("");
    expect(result.status).toBe(0);
    expect(result.stdout).toMatch(/^ok lacito /m);
    expect(result.stdout).toContain("catalog now holds 1 entries");
  });

  it("is found by the search view through the subject-language picker", async () => {
    const catalogService = await startService([
      "serve-catalog",
      "--store",
      join(workDir, "store.json"),
      "--bind",
      `127.0.0.1:${await freePort()}`,
    ]);
    const catalog = new CatalogClient(catalogService.url);
    const view = new SearchView(catalog);

    // The picker itself offers the code, straight from the live vocabulary.
    const pickerTable = view.pickerTableFor("subject.language");
    expect(pickerTable).toBe("language-codes");
    const options = await view.vocabularyOptions(pickerTable ?? "");
    const limbu = options.find((option) => option.code === "x-sil-LIF");
    expect(limbu).toBeDefined();
    expect(limbu?.label).toContain("Limbu");

    view.setCodeFilter("subject.language", "x-sil-LIF");
    view.setFacets(["language"]);
    await view.run();

    expect(view.status).toBe("ready");
    expect(view.page?.total).toBe(1);
    expect(view.rows).toHaveLength(1);
    expect(view.rows[0].title).toBe("Limbu-English Dictionary");
    expect(view.rows[0].archiveId).toBe("lacito");
    expect(view.rows[0].resourceUrl).toBe(
      "http://lacito.archivage.vjf.cnrs.fr/archives/Nepal/Limbu/dicoLimbu.xml",
    );

    const html = view.renderResults();
    expect(html).toContain(
      '<a href="http://lacito.archivage.vjf.cnrs.fr/archives/Nepal/Limbu/dicoLimbu.xml">' +
        "Limbu-English Dictionary</a>",
    );

    // Facet counts beside the codes agree with the canonical XML answer.
    const xml = await catalog.searchXml(view.input);
    expect(xml.total).toBe(1);
    const xmlLanguage = xml.facets.find((facet) => facet.element === "language");
    expect(xmlLanguage).toBeDefined();
    expect(view.page?.facets).toEqual(
      (xmlLanguage?.counts ?? []).map(({ code, count }) => ({
        element: "language",
        code,
        count,
      })),
    );
  });
});
