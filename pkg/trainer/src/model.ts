/** The shallow 3D segmentation network, built on core ops.
 *
 * conv(2->16)+BN+ReLU, conv(16->32)+BN+ReLU, conv(32->64)+BN+ReLU,
 * conv(64->1)+sigmoid, all 3x3x3 same-padded. The layers API cannot
 * batch-normalize rank-5 tensors, so BN is explicit broadcast arithmetic;
 * dropout (rate 0.2) applies after each ReLU during training only.
 * Tensors are [batch, z, y, x, channels].
 */

import * as tf from "@tensorflow/tfjs";

import { Rng } from "./rng.js";
import { BnParams, CHANNELS, ConvParams, ModelParams, zeroParams } from "./wbw1.js";

export const DROPOUT_RATE = 0.2;
export const BN_EPS = 1e-3;

interface ConvVars {
    kernel: tf.Variable; // [3, 3, 3, in, out]
    bias: tf.Variable; // [out]
}

interface BnVars {
    gamma: tf.Variable;
    beta: tf.Variable;
    movingMean: tf.Variable; // not trained; calibrated before export
    movingVar: tf.Variable;
}

export class SegNet {
    convs: ConvVars[] = [];
    bns: BnVars[] = [];
    private dropoutSeed: number;

    constructor(seed = 0) {
        this.dropoutSeed = seed * 31 + 17;
        for (let i = 0; i < 4; i++) {
            const [cin, cout] = [CHANNELS[i], CHANNELS[i + 1]];
            const init = tf.initializers.glorotUniform({ seed: seed * 101 + i });
            this.convs.push({
                kernel: tf.variable(init.apply([3, 3, 3, cin, cout]) as tf.Tensor, true),
                bias: tf.variable(tf.zeros([cout]), true),
            });
            if (i < 3) {
                this.bns.push({
                    gamma: tf.variable(tf.ones([cout]), true),
                    beta: tf.variable(tf.zeros([cout]), true),
                    movingMean: tf.variable(tf.zeros([cout]), false),
                    movingVar: tf.variable(tf.ones([cout]), false),
                });
            }
        }
    }

    trainableVars(): tf.Variable[] {
        const vars: tf.Variable[] = [];
        this.convs.forEach((c) => vars.push(c.kernel, c.bias));
        this.bns.forEach((b) => vars.push(b.gamma, b.beta));
        return vars;
    }

    /** Forward pass. Training mode uses batch statistics and dropout. */
    forward(x: tf.Tensor5D, training: boolean): tf.Tensor5D {
        return tf.tidy(() => {
            let h: tf.Tensor = x;
            for (let i = 0; i < 4; i++) {
                h = tf.add(tf.conv3d(h as tf.Tensor5D, this.convs[i].kernel as tf.Tensor5D, 1, "same"),
                    this.convs[i].bias);
                if (i < 3) {
                    const bn = this.bns[i];
                    let mean: tf.Tensor;
                    let variance: tf.Tensor;
                    if (training) {
                        ({ mean, variance } = tf.moments(h, [0, 1, 2, 3]));
                    } else {
                        mean = bn.movingMean;
                        variance = bn.movingVar;
                    }
                    const scale = tf.mul(bn.gamma, tf.rsqrt(tf.add(variance, BN_EPS)));
                    h = tf.add(tf.mul(tf.sub(h, mean), scale), bn.beta);
                    h = tf.relu(h);
                    if (training) {
                        h = tf.dropout(h, DROPOUT_RATE, undefined, this.dropoutSeed + i);
                    }
                } else {
                    h = tf.sigmoid(h);
                }
            }
            return h as tf.Tensor5D;
        });
    }

    /** Recompute moving BN statistics from representative batches.
     *
     * Training normalizes with per-batch moments, so the exported running
     * stats must match the batch distribution the weights settled under;
     * this aggregates exact moments over the given batches, layer by layer.
     */
    calibrateBn(batches: tf.Tensor5D[]): void {
        const sums: { n: number; sum: Float64Array; sumSq: Float64Array }[] = this.bns.map(
            (_, i) => ({
                n: 0,
                sum: new Float64Array(CHANNELS[i + 1]),
                sumSq: new Float64Array(CHANNELS[i + 1]),
            }),
        );
        for (const batch of batches) {
            let h: tf.Tensor = batch;
            for (let i = 0; i < 3; i++) {
                const pre = tf.tidy(() => tf.add(
                    tf.conv3d(h as tf.Tensor5D, this.convs[i].kernel as tf.Tensor5D, 1, "same"),
                    this.convs[i].bias,
                ));
                const cout = CHANNELS[i + 1];
                const flat = pre.reshape([-1, cout]);
                const data = flat.dataSync();
                const voxels = flat.shape[0];
                for (let v = 0; v < voxels; v++) {
                    for (let c = 0; c < cout; c++) {
                        const val = data[v * cout + c];
                        sums[i].sum[c] += val;
                        sums[i].sumSq[c] += val * val;
                    }
                }
                sums[i].n += voxels;
                flat.dispose();
                // continue with the *calibrated-so-far* batch stats, matching training
                const bn = this.bns[i];
                const next = tf.tidy(() => {
                    const { mean, variance } = tf.moments(pre, [0, 1, 2, 3]);
                    const scale = tf.mul(bn.gamma, tf.rsqrt(tf.add(variance, BN_EPS)));
                    return tf.relu(tf.add(tf.mul(tf.sub(pre, mean), scale), bn.beta));
                });
                pre.dispose();
                if (h !== batch) (h as tf.Tensor).dispose();
                h = next;
            }
            if (h !== batch) (h as tf.Tensor).dispose();
        }
        for (let i = 0; i < 3; i++) {
            const { n, sum, sumSq } = sums[i];
            const cout = CHANNELS[i + 1];
            const mean = new Float32Array(cout);
            const variance = new Float32Array(cout);
            for (let c = 0; c < cout; c++) {
                mean[c] = sum[c] / n;
                variance[c] = Math.max(0, sumSq[c] / n - mean[c] * mean[c]);
            }
            this.bns[i].movingMean.assign(tf.tensor1d(mean));
            this.bns[i].movingVar.assign(tf.tensor1d(variance));
        }
    }

    /** Export to the portable parameter container (WBW1 tensor layouts). */
    toParams(): ModelParams {
        const params = zeroParams();
        for (let i = 0; i < 4; i++) {
            // [kz, ky, kx, in, out] -> (out, in, kz, ky, kx)
            const k = tf.tidy(() => this.convs[i].kernel.transpose([4, 3, 0, 1, 2]));
            params.convs[i].kernel = new Float32Array(k.dataSync());
            k.dispose();
            params.convs[i].bias = new Float32Array(this.convs[i].bias.dataSync());
            if (i < 3) {
                const bn = this.bns[i];
                params.bns[i] = {
                    gamma: new Float32Array(bn.gamma.dataSync()),
                    beta: new Float32Array(bn.beta.dataSync()),
                    movingMean: new Float32Array(bn.movingMean.dataSync()),
                    movingVar: new Float32Array(bn.movingVar.dataSync()),
                    eps: BN_EPS,
                };
            }
        }
        return params;
    }

    static fromParams(params: ModelParams): SegNet {
        const net = new SegNet(0);
        for (let i = 0; i < 4; i++) {
            const conv = params.convs[i];
            const asTfjs = tf.tidy(() => tf
                .tensor(Array.from(conv.kernel), [conv.outCh, conv.inCh, 3, 3, 3])
                .transpose([2, 3, 4, 1, 0]));
            net.convs[i].kernel.assign(asTfjs);
            asTfjs.dispose();
            net.convs[i].bias.assign(tf.tensor1d(conv.bias));
            if (i < 3) {
                const bn = params.bns[i];
                net.bns[i].gamma.assign(tf.tensor1d(bn.gamma));
                net.bns[i].beta.assign(tf.tensor1d(bn.beta));
                net.bns[i].movingMean.assign(tf.tensor1d(bn.movingMean));
                net.bns[i].movingVar.assign(tf.tensor1d(bn.movingVar));
            }
        }
        return net;
    }
}

/** Inference forward over a whole (z, y, x) volume pair; returns flat probs. */
export function predictVolume(
    net: SegNet,
    skeleton: Float32Array,
    b900: Float32Array,
    dims: [number, number, number],
): Float32Array {
    const [nx, ny, nz] = dims;
    return tf.tidy(() => {
        const sk = tf.tensor3d(skeleton, [nz, ny, nx]);
        const b9 = tf.tensor3d(b900, [nz, ny, nx]);
        const x = tf.stack([sk, b9], -1).expandDims(0) as tf.Tensor5D;
        const out = net.forward(x, false);
        return new Float32Array(out.dataSync());
    });
}
