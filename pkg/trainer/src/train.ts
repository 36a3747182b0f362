/** Training loop: Adam on the combined dice + cross-entropy loss. */

import * as tf from "@tensorflow/tfjs";
import * as fs from "node:fs";

import { loadStudy, PatchSampler, Study } from "./data.js";
import { diceBceLoss } from "./loss.js";
import { SegNet } from "./model.js";
import { Rng } from "./rng.js";
import { saveWbw1 } from "./wbw1.js";

export interface TrainSpec {
    cohortDirs: string[];
    epochs: number;
    batchSize: number;
    learningRate: number;
    patchSize: number;
    stepsPerEpoch: number;
    seed: number;
    wbdwiBin: string;
}

export const DEFAULT_SPEC: Omit<TrainSpec, "cohortDirs"> = {
    epochs: 150,
    batchSize: 16,
    learningRate: 1e-3,
    patchSize: 64,
    stepsPerEpoch: 16,
    seed: 0,
    wbdwiBin: "wbdwi",
};

export interface TrainLog {
    spec: Omit<TrainSpec, "wbdwiBin">;
    epochs: { epoch: number; loss: number }[];
    durationS: number;
    validationDice: number | null;
}

export interface TrainResult {
    net: SegNet;
    log: TrainLog;
}

export async function train(spec: TrainSpec): Promise<TrainResult> {
    await tf.setBackend("cpu");
    await tf.ready();
    const t0 = Date.now();
    const studies: Study[] = spec.cohortDirs.map((d) => loadStudy(d, spec.wbdwiBin));
    const rng = new Rng(spec.seed);
    const sampler = new PatchSampler(studies, spec.patchSize, rng);
    const net = new SegNet(spec.seed);
    const optimizer = tf.train.adam(spec.learningRate);
    const trainable = net.trainableVars();

    const p = spec.patchSize;
    const log: TrainLog = {
        spec: {
            cohortDirs: spec.cohortDirs,
            epochs: spec.epochs,
            batchSize: spec.batchSize,
            learningRate: spec.learningRate,
            patchSize: spec.patchSize,
            stepsPerEpoch: spec.stepsPerEpoch,
            seed: spec.seed,
        },
        epochs: [],
        durationS: 0,
        validationDice: null,
    };

    for (let epoch = 0; epoch < spec.epochs; epoch++) {
        let epochLoss = 0;
        for (let step = 0; step < spec.stepsPerEpoch; step++) {
            const { inputs, targets } = sampler.batch(spec.batchSize);
            const x = tf.tensor5d(inputs, [spec.batchSize, p, p, p, 2]);
            const y = tf.tensor5d(targets, [spec.batchSize, p, p, p, 1]);
            const lossVal = optimizer.minimize(
                () => diceBceLoss(y, net.forward(x, true)),
                true,
                trainable,
            ) as tf.Scalar;
            epochLoss += lossVal.dataSync()[0];
            lossVal.dispose();
            x.dispose();
            y.dispose();
            if (!Number.isFinite(epochLoss)) {
                throw new Error(`non-finite loss at epoch ${epoch}, step ${step}`);
            }
        }
        log.epochs.push({ epoch, loss: epochLoss / spec.stepsPerEpoch });
    }

    // pin the exported running statistics to the training patch distribution
    if (spec.epochs > 0) {
        const calibration: tf.Tensor5D[] = [];
        for (let i = 0; i < 8; i++) {
            const { inputs } = sampler.batch(spec.batchSize);
            calibration.push(tf.tensor5d(inputs, [spec.batchSize, p, p, p, 2]));
        }
        net.calibrateBn(calibration);
        calibration.forEach((t) => t.dispose());
    }
    log.durationS = (Date.now() - t0) / 1000;
    return { net, log };
}

export function exportModel(net: SegNet, outPath: string): void {
    saveWbw1(net.toParams(), outPath);
}

export function writeLog(log: TrainLog, path: string): void {
    fs.writeFileSync(path, JSON.stringify(log, null, 2) + "\n");
}
