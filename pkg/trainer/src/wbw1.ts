/** WBW1 weight container: the byte format shared with the inference engine.
 *
 * Layout: magic "WBW1"; u32 LE header length; UTF-8 JSON header
 * {format_version: 1, layers: [{name, kind, shape, offset, nbytes, fn?}]};
 * payload of concatenated LE float32 tensors. Convolution kernels are stored
 * (out_ch, in_ch, kz, ky, kx).
 */

import * as fs from "node:fs";

export const CHANNELS = [2, 16, 32, 64, 1] as const;

export interface ConvParams {
    /** Flat kernel in (out, in, kz, ky, kx) order. */
    kernel: Float32Array;
    bias: Float32Array;
    inCh: number;
    outCh: number;
}

export interface BnParams {
    gamma: Float32Array;
    beta: Float32Array;
    movingMean: Float32Array;
    movingVar: Float32Array;
    eps: number;
}

export interface ModelParams {
    convs: ConvParams[]; // 4 convolutions
    bns: BnParams[]; // 3 batch-norms
}

interface HeaderEntry {
    name: string;
    kind: string;
    shape: number[];
    offset: number;
    nbytes: number;
    fn?: string;
}

export function zeroParams(): ModelParams {
    const convs: ConvParams[] = [];
    const bns: BnParams[] = [];
    for (let i = 0; i < 4; i++) {
        const [cin, cout] = [CHANNELS[i], CHANNELS[i + 1]];
        convs.push({
            kernel: new Float32Array(cout * cin * 27),
            bias: new Float32Array(cout),
            inCh: cin,
            outCh: cout,
        });
        if (i < 3) {
            bns.push({
                gamma: new Float32Array(cout).fill(1),
                beta: new Float32Array(cout),
                movingMean: new Float32Array(cout),
                movingVar: new Float32Array(cout).fill(1),
                eps: 1e-3,
            });
        }
    }
    return { convs, bns };
}

export function encodeWbw1(params: ModelParams): Buffer {
    const entries: HeaderEntry[] = [];
    const chunks: Buffer[] = [];
    let offset = 0;

    const push = (name: string, kind: string, shape: number[], data: Float32Array) => {
        const buf = Buffer.from(data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength));
        entries.push({ name, kind, shape, offset, nbytes: buf.length });
        chunks.push(buf);
        offset += buf.length;
    };

    for (let i = 0; i < 4; i++) {
        const conv = params.convs[i];
        push(`conv${i + 1}.weight`, "conv3d", [conv.outCh, conv.inCh, 3, 3, 3], conv.kernel);
        push(`conv${i + 1}.bias`, "conv3d", [conv.outCh], conv.bias);
        if (i < 3) {
            const bn = params.bns[i];
            push(`bn${i + 1}.gamma`, "batchnorm", [conv.outCh], bn.gamma);
            push(`bn${i + 1}.beta`, "batchnorm", [conv.outCh], bn.beta);
            push(`bn${i + 1}.running_mean`, "batchnorm", [conv.outCh], bn.movingMean);
            push(`bn${i + 1}.running_var`, "batchnorm", [conv.outCh], bn.movingVar);
            push(`bn${i + 1}.eps`, "batchnorm", [1], Float32Array.of(bn.eps));
            entries.push({
                name: `act${i + 1}`, kind: "activation", shape: [], offset, nbytes: 0, fn: "relu",
            });
        } else {
            entries.push({
                name: `act${i + 1}`, kind: "activation", shape: [], offset, nbytes: 0, fn: "sigmoid",
            });
        }
    }
    const header = Buffer.from(JSON.stringify({ format_version: 1, layers: entries }), "utf-8");
    const lenBuf = Buffer.alloc(4);
    lenBuf.writeUInt32LE(header.length, 0);
    return Buffer.concat([Buffer.from("WBW1", "latin1"), lenBuf, header, ...chunks]);
}

export function saveWbw1(params: ModelParams, path: string): void {
    fs.writeFileSync(path, encodeWbw1(params));
}

export function loadWbw1(path: string): ModelParams {
    const raw = fs.readFileSync(path);
    if (raw.toString("latin1", 0, 4) !== "WBW1") {
        throw new Error(`${path}: bad magic`);
    }
    const hlen = raw.readUInt32LE(4);
    const doc = JSON.parse(raw.toString("utf-8", 8, 8 + hlen));
    if (doc.format_version !== 1) {
        throw new Error(`${path}: unsupported format_version ${doc.format_version}`);
    }
    const payload = raw.subarray(8 + hlen);
    const tensors = new Map<string, Float32Array>();
    for (const entry of doc.layers as HeaderEntry[]) {
        if (entry.kind === "activation") continue;
        const n = entry.shape.reduce((a: number, b: number) => a * b, 1);
        if (entry.nbytes !== 4 * n) {
            throw new Error(`${path}: ${entry.name} declares ${entry.nbytes} bytes for shape ${entry.shape}`);
        }
        const slice = payload.subarray(entry.offset, entry.offset + entry.nbytes);
        tensors.set(entry.name, new Float32Array(slice.buffer.slice(
            slice.byteOffset, slice.byteOffset + slice.byteLength,
        )));
    }
    const need = (name: string): Float32Array => {
        const t = tensors.get(name);
        if (!t) throw new Error(`${path}: missing tensor ${name}`);
        return t;
    };
    const convs: ConvParams[] = [];
    const bns: BnParams[] = [];
    for (let i = 0; i < 4; i++) {
        convs.push({
            kernel: need(`conv${i + 1}.weight`),
            bias: need(`conv${i + 1}.bias`),
            inCh: CHANNELS[i],
            outCh: CHANNELS[i + 1],
        });
        if (i < 3) {
            bns.push({
                gamma: need(`bn${i + 1}.gamma`),
                beta: need(`bn${i + 1}.beta`),
                movingMean: need(`bn${i + 1}.running_mean`),
                movingVar: need(`bn${i + 1}.running_var`),
                eps: need(`bn${i + 1}.eps`)[0],
            });
        }
    }
    return { convs, bns };
}
