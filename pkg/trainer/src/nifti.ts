/** Minimal single-file NIfTI-1 I/O: little-endian, 3 dims, int16/float32. */

import * as fs from "node:fs";

const HEADER_SIZE = 348;
const VOX_OFFSET = 352;
const DT_INT16 = 4;
const DT_FLOAT32 = 16;
const MAGIC = "n+1\0";

export interface Volume {
    dims: [number, number, number]; // (nx, ny, nz)
    spacing: [number, number, number];
    origin: [number, number, number];
    /** Flat data, x fastest (index = x + nx*(y + ny*z)). */
    data: Float32Array;
}

export function readNifti(path: string): Volume {
    const raw = fs.readFileSync(path);
    if (raw.length < HEADER_SIZE) {
        throw new Error(`${path}: truncated header (${raw.length} bytes)`);
    }
    if (raw.toString("latin1", 344, 348) !== MAGIC) {
        throw new Error(`${path}: not a single-file NIfTI-1`);
    }
    if (raw.readInt32LE(0) !== HEADER_SIZE) {
        throw new Error(`${path}: unsupported byte order`);
    }
    const ndim = raw.readInt16LE(40);
    if (ndim !== 3) throw new Error(`${path}: expected 3 dims, got ${ndim}`);
    const dims: [number, number, number] = [
        raw.readInt16LE(42), raw.readInt16LE(44), raw.readInt16LE(46),
    ];
    const datatype = raw.readInt16LE(70);
    if (datatype !== DT_INT16 && datatype !== DT_FLOAT32) {
        throw new Error(`${path}: unsupported datatype ${datatype}`);
    }
    const spacing: [number, number, number] = [
        canon(raw.readFloatLE(80)), canon(raw.readFloatLE(84)), canon(raw.readFloatLE(88)),
    ];
    const origin: [number, number, number] = [
        canon(raw.readFloatLE(268)), canon(raw.readFloatLE(272)), canon(raw.readFloatLE(276)),
    ];
    const voxOffset = Math.round(raw.readFloatLE(108));
    const slope = raw.readFloatLE(112);
    const inter = raw.readFloatLE(116);
    const n = dims[0] * dims[1] * dims[2];
    const itemSize = datatype === DT_INT16 ? 2 : 4;
    if (raw.length < voxOffset + n * itemSize) {
        throw new Error(`${path}: truncated payload`);
    }
    const data = new Float32Array(n);
    for (let i = 0; i < n; i++) {
        const v = datatype === DT_INT16
            ? raw.readInt16LE(voxOffset + 2 * i)
            : raw.readFloatLE(voxOffset + 4 * i);
        data[i] = slope !== 0 && !(slope === 1 && inter === 0) ? v * slope + inter : v;
    }
    return { dims, spacing, origin, data };
}

function canon(v: number): number {
    return Number(v.toPrecision(6));
}

export function writeNifti(vol: Volume, path: string): void {
    const [nx, ny, nz] = vol.dims;
    const n = nx * ny * nz;
    if (vol.data.length !== n) {
        throw new Error(`data length ${vol.data.length} != ${n}`);
    }
    const buf = Buffer.alloc(VOX_OFFSET + 4 * n);
    buf.writeInt32LE(HEADER_SIZE, 0);
    buf.writeInt16LE(3, 40);
    buf.writeInt16LE(nx, 42);
    buf.writeInt16LE(ny, 44);
    buf.writeInt16LE(nz, 46);
    buf.writeInt16LE(1, 48);
    buf.writeInt16LE(1, 50);
    buf.writeInt16LE(1, 52);
    buf.writeInt16LE(1, 54);
    buf.writeInt16LE(DT_FLOAT32, 70);
    buf.writeInt16LE(32, 72);
    buf.writeFloatLE(1, 76);
    buf.writeFloatLE(vol.spacing[0], 80);
    buf.writeFloatLE(vol.spacing[1], 84);
    buf.writeFloatLE(vol.spacing[2], 88);
    buf.writeFloatLE(VOX_OFFSET, 108);
    buf.writeFloatLE(1, 112); // scl_slope
    buf.writeFloatLE(0, 116); // scl_inter
    buf.write("wbdwi-trainer", 148, "latin1");
    buf.writeInt16LE(1, 252); // qform_code
    buf.writeFloatLE(vol.origin[0], 268);
    buf.writeFloatLE(vol.origin[1], 272);
    buf.writeFloatLE(vol.origin[2], 276);
    buf.write(MAGIC, 344, "latin1");
    for (let i = 0; i < n; i++) buf.writeFloatLE(vol.data[i], VOX_OFFSET + 4 * i);
    fs.writeFileSync(path, buf);
}
