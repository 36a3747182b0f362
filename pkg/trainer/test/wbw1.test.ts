import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { Rng } from "../src/rng.js";
import { encodeWbw1, loadWbw1, saveWbw1, zeroParams } from "../src/wbw1.js";
import { randomParams } from "../src/parity.js";

function tmpFile(name: string): string {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "wbw1test-"));
    return path.join(dir, name);
}

describe("wbw1 container", () => {
    it("round-trips every tensor bitwise", () => {
        const params = randomParams(7);
        const file = tmpFile("m.wbw1");
        saveWbw1(params, file);
        const back = loadWbw1(file);
        for (let i = 0; i < 4; i++) {
            expect(back.convs[i].kernel).toEqual(params.convs[i].kernel);
            expect(back.convs[i].bias).toEqual(params.convs[i].bias);
        }
        for (let i = 0; i < 3; i++) {
            expect(back.bns[i].gamma).toEqual(params.bns[i].gamma);
            expect(back.bns[i].movingVar).toEqual(params.bns[i].movingVar);
            expect(back.bns[i].eps).toBeCloseTo(params.bns[i].eps, 9);
        }
    });

    it("has the documented magic and header framing", () => {
        const buf = encodeWbw1(zeroParams());
        expect(buf.subarray(0, 4).toString("latin1")).toBe("WBW1");
        const hlen = buf.readUInt32LE(4);
        const header = JSON.parse(buf.subarray(8, 8 + hlen).toString("utf-8"));
        expect(header.format_version).toBe(1);
        const names = header.layers.map((l: { name: string }) => l.name);
        expect(names).toContain("conv1.weight");
        expect(names).toContain("bn3.running_var");
        expect(names).toContain("act4");
        const act4 = header.layers.find((l: { name: string }) => l.name === "act4");
        expect(act4.fn).toBe("sigmoid");
    });

    it("rejects a bad magic", () => {
        const file = tmpFile("bad.wbw1");
        fs.writeFileSync(file, Buffer.from("NOPE\0\0\0\0"));
        expect(() => loadWbw1(file)).toThrow(/magic/);
    });

    it("kernel layout is (out, in, kz, ky, kx)", () => {
        // plant a recognizable value and check its flat position
        const params = zeroParams();
        const conv = params.convs[0]; // out 16, in 2
        const [out, cin, kz, ky, kx] = [3, 1, 2, 0, 1];
        conv.kernel[(((out * 2 + cin) * 3 + kz) * 3 + ky) * 3 + kx] = 42;
        const file = tmpFile("layout.wbw1");
        saveWbw1(params, file);
        const back = loadWbw1(file);
        expect(back.convs[0].kernel[(((3 * 2 + 1) * 3 + 2) * 3 + 0) * 3 + 1]).toBe(42);
    });
});
