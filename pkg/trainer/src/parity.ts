/** Forward-pass parity oracle: this trainer vs the inference engine.
 *
 * Fixtures are (skeleton, b900) volume pairs at 1.6 mm in-plane spacing whose
 * size equals the engine's configured patch size, so the sliding-window pass
 * reduces to a single same-padded forward and the two implementations
 * compute the same function (a larger padded window would differ: bias and
 * batch-norm terms make deep-layer activations nonzero in padding). The
 * engine side runs through its public CLI (`wbdwi cnn-apply`); volumes
 * travel as NIfTI, weights as WBW1.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

import { predictVolume, SegNet } from "./model.js";
import { readNifti, writeNifti } from "./nifti.js";
import { Rng } from "./rng.js";
import { ModelParams, zeroParams } from "./wbw1.js";

export interface ParityFixture {
    name: string;
    maxAbsDiff: number;
}

export interface ParityReport {
    fixtures: ParityFixture[];
    maxAbsDiff: number;
    tolerance: number;
    pass: boolean;
}

/** Random parameters with batch-norm statistics scaled to keep activations O(1). */
export function randomParams(seed: number): ModelParams {
    const rng = new Rng(seed);
    const params = zeroParams();
    for (let i = 0; i < 4; i++) {
        rng.fillNormal(params.convs[i].kernel, 0, 0.05);
        rng.fillNormal(params.convs[i].bias, 0, 0.05);
        if (i < 3) {
            const bn = params.bns[i];
            rng.fillUniform(bn.gamma, 0.5, 1.5);
            rng.fillNormal(bn.beta, 0, 0.1);
            if (i === 0) {
                // first layer sees raw b900 units (~10^3), so its pre-BN spread is ~10^2
                rng.fillNormal(bn.movingMean, 0, 50);
                rng.fillUniform(bn.movingVar, 5e4, 2e5);
            } else {
                rng.fillNormal(bn.movingMean, 0, 0.3);
                rng.fillUniform(bn.movingVar, 0.3, 1.5);
            }
        }
    }
    return params;
}

function writeFixtureVolumes(dir: string, size: number, rng: Rng): { sk: string; b9: string } {
    const n = size * size * size;
    const skeleton = rng.fillUniform(new Float32Array(n), 0, 1);
    const b900 = rng.fillUniform(new Float32Array(n), 0, 3000);
    const dims: [number, number, number] = [size, size, size];
    const spacing: [number, number, number] = [1.6, 1.6, 5.0];
    const sk = path.join(dir, `sk_${size}.nii`);
    const b9 = path.join(dir, `b9_${size}.nii`);
    writeNifti({ dims, spacing, origin: [0, 0, 0], data: skeleton }, sk);
    writeNifti({ dims, spacing, origin: [0, 0, 0], data: b900 }, b9);
    return { sk, b9 };
}

function engineForward(
    skPath: string, b9Path: string, weightsPath: string, outPath: string,
    configPath: string, wbdwiBin: string,
): Float32Array {
    execFileSync(wbdwiBin, [
        "cnn-apply", "--skeleton", skPath, "--b900", b9Path,
        "--weights", weightsPath, "--out", outPath, "--config", configPath,
    ], { stdio: "pipe" });
    return readNifti(outPath).data;
}

export function parityCheck(
    net: SegNet,
    weightsPath: string,
    workDir: string,
    nFixtures = 10,
    seed = 0,
    fixtureSize = 16,
    wbdwiBin = "wbdwi",
): ParityReport {
    fs.mkdirSync(workDir, { recursive: true });
    const configPath = path.join(workDir, "engine_config.json");
    fs.writeFileSync(configPath, JSON.stringify({
        segment: { backend: "cnn", patch_size: fixtureSize },
    }));
    const fixtures: ParityFixture[] = [];
    for (let i = 0; i < nFixtures; i++) {
        const rng = new Rng(seed * 1000 + i);
        const { sk, b9 } = writeFixtureVolumes(workDir, fixtureSize, rng);
        // read back the float32 files so both sides consume identical bytes
        const skVol = readNifti(sk);
        const b9Vol = readNifti(b9);
        const ours = predictVolume(net, skVol.data, b9Vol.data, skVol.dims);
        const theirs = engineForward(
            sk, b9, weightsPath, path.join(workDir, `engine_${i}.nii`), configPath, wbdwiBin,
        );
        let maxDiff = 0;
        for (let v = 0; v < ours.length; v++) {
            maxDiff = Math.max(maxDiff, Math.abs(ours[v] - theirs[v]));
        }
        fixtures.push({ name: `fixture_${i}`, maxAbsDiff: maxDiff });
    }
    const maxAbsDiff = Math.max(...fixtures.map((f) => f.maxAbsDiff));
    return { fixtures, maxAbsDiff, tolerance: 1e-4, pass: maxAbsDiff <= 1e-4 };
}
