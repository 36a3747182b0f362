/** Forward-pass parity against the inference engine (acceptance criterion). */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { SegNet } from "../src/model.js";
import { parityCheck, randomParams } from "../src/parity.js";
import { loadWbw1, saveWbw1, zeroParams } from "../src/wbw1.js";

function tmpDir(tag: string): string {
    return fs.mkdtempSync(path.join(os.tmpdir(), `parity-${tag}-`));
}

beforeAll(() => {
    execFileSync("wbdwi", ["--help"], { stdio: "pipe" }); // engine must be on PATH
});

describe("trainer vs engine forward-pass parity", () => {
    it("zero weights agree exactly at 0.5", () => {
        const dir = tmpDir("zero");
        const file = path.join(dir, "zeros.wbw1");
        saveWbw1(zeroParams(), file);
        const report = parityCheck(SegNet.fromParams(loadWbw1(file)), file, dir, 2, 0, 16);
        expect(report.maxAbsDiff).toBeLessThan(1e-7);
    });

    it("10 random fixtures stay within 1e-4", () => {
        const dir = tmpDir("rand");
        const file = path.join(dir, "rand.wbw1");
        saveWbw1(randomParams(5), file);
        const report = parityCheck(SegNet.fromParams(loadWbw1(file)), file, dir, 10, 3, 16);
        console.log(`parity max |diff| = ${report.maxAbsDiff.toExponential(3)}`);
        expect(report.fixtures.length).toBe(10);
        expect(report.pass).toBe(true);
        expect(report.maxAbsDiff).toBeLessThanOrEqual(1e-4);
    });

    it("flags a corrupted export", () => {
        const dir = tmpDir("corrupt");
        const file = path.join(dir, "model.wbw1");
        const params = randomParams(8);
        saveWbw1(params, file);
        const net = SegNet.fromParams(params); // the honest in-memory model

        const corrupted = loadWbw1(file);
        corrupted.convs[3].bias[0] += 2.5; // silently damaged on disk
        const badFile = path.join(dir, "corrupted.wbw1");
        saveWbw1(corrupted, badFile);

        const report = parityCheck(net, badFile, dir, 2, 1, 16);
        expect(report.pass).toBe(false);
        expect(report.maxAbsDiff).toBeGreaterThan(1e-2);
    });
});
