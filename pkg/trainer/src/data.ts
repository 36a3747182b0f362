/** Study-directory loading and patch sampling for training.
 *
 * A study dir is the engine's standard layout (sidecar.json, b-value series,
 * masks, truth/lesion_mask.nii). The normalized b900 channel is produced by
 * the engine itself: `wbdwi normalize <study> --out <study>/derived` runs on
 * demand when derived/norm_b900.nii is missing.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

import { readNifti, Volume } from "./nifti.js";
import { Rng } from "./rng.js";

export interface Study {
    dir: string;
    dims: [number, number, number];
    skeleton: Float32Array;
    b900: Float32Array;
    lesion: Float32Array; // truth mask (0/1)
    lesionIdx: Int32Array; // flat indices of lesion voxels
    skeletonIdx: Int32Array; // flat indices of skeleton voxels
}

export function ensureNormalized(studyDir: string, wbdwiBin = "wbdwi"): string {
    const derived = path.join(studyDir, "derived");
    const normPath = path.join(derived, "norm_b900.nii");
    if (!fs.existsSync(normPath)) {
        execFileSync(wbdwiBin, ["normalize", studyDir, "--out", derived], { stdio: "pipe" });
    }
    return normPath;
}

export function loadStudy(studyDir: string, wbdwiBin = "wbdwi"): Study {
    const skeleton = readNifti(path.join(studyDir, "skeleton_prob.nii"));
    const b900 = readNifti(ensureNormalized(studyDir, wbdwiBin));
    const lesion = readNifti(path.join(studyDir, "truth", "lesion_mask.nii"));
    const n = skeleton.data.length;
    if (b900.data.length !== n || lesion.data.length !== n) {
        throw new Error(`${studyDir}: volume sizes disagree`);
    }
    const lesionIdx: number[] = [];
    const skeletonIdx: number[] = [];
    for (let i = 0; i < n; i++) {
        if (lesion.data[i] > 0.5) lesionIdx.push(i);
        if (skeleton.data[i] >= 0.5) skeletonIdx.push(i);
    }
    return {
        dir: studyDir,
        dims: skeleton.dims,
        skeleton: skeleton.data,
        b900: b900.data,
        lesion: lesion.data,
        lesionIdx: Int32Array.from(lesionIdx),
        skeletonIdx: Int32Array.from(skeletonIdx),
    };
}

export interface Patch {
    /** Channel-last flat input (z, y, x, 2). */
    input: Float32Array;
    /** Flat target (z, y, x). */
    target: Float32Array;
}

/** Half lesion-centered, half uniform within the skeleton. */
export class PatchSampler {
    constructor(
        private studies: Study[],
        private patchSize: number,
        private rng: Rng,
    ) {
        if (!studies.length) throw new Error("no studies to sample from");
    }

    private centerFor(study: Study, lesionCentered: boolean): [number, number, number] {
        const pool = lesionCentered && study.lesionIdx.length
            ? study.lesionIdx
            : study.skeletonIdx.length
                ? study.skeletonIdx
                : null;
        const [nx, ny, nz] = study.dims;
        if (!pool) {
            return [this.rng.int(nx), this.rng.int(ny), this.rng.int(nz)];
        }
        const flat = pool[this.rng.int(pool.length)];
        const x = flat % nx;
        const y = Math.floor(flat / nx) % ny;
        const z = Math.floor(flat / (nx * ny));
        return [x, y, z];
    }

    sample(lesionCentered: boolean): Patch {
        const study = this.studies[this.rng.int(this.studies.length)];
        const p = this.patchSize;
        const [nx, ny, nz] = study.dims;
        const [cx, cy, cz] = this.centerFor(study, lesionCentered);
        const x0 = Math.max(0, Math.min(cx - (p >> 1), nx - p));
        const y0 = Math.max(0, Math.min(cy - (p >> 1), ny - p));
        const z0 = Math.max(0, Math.min(cz - (p >> 1), nz - p));
        const input = new Float32Array(p * p * p * 2);
        const target = new Float32Array(p * p * p);
        let j = 0;
        for (let z = z0; z < z0 + p; z++) {
            for (let y = y0; y < y0 + p; y++) {
                for (let x = x0; x < x0 + p; x++) {
                    const inside = z < nz && y < ny && x < nx;
                    const flat = inside ? x + nx * (y + ny * z) : -1;
                    input[2 * j] = inside ? study.skeleton[flat] : 0;
                    input[2 * j + 1] = inside ? study.b900[flat] : 0;
                    target[j] = inside && study.lesion[flat] > 0.5 ? 1 : 0;
                    j++;
                }
            }
        }
        return { input, target };
    }

    batch(size: number): { inputs: Float32Array; targets: Float32Array } {
        const p = this.patchSize;
        const voxels = p * p * p;
        const inputs = new Float32Array(size * voxels * 2);
        const targets = new Float32Array(size * voxels);
        for (let b = 0; b < size; b++) {
            const patch = this.sample(b % 2 === 0);
            inputs.set(patch.input, b * voxels * 2);
            targets.set(patch.target, b * voxels);
        }
        return { inputs, targets };
    }
}
