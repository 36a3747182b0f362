/** Small deterministic PRNG (splitmix64-seeded mulberry32). */

export class Rng {
    private state: number;

    constructor(seed: number) {
        // scramble the seed so nearby seeds give unrelated streams
        let h = (seed >>> 0) + 0x9e3779b9;
        h = Math.imul(h ^ (h >>> 16), 0x21f0aaad);
        h = Math.imul(h ^ (h >>> 15), 0x735a2d97);
        this.state = (h ^ (h >>> 15)) >>> 0;
    }

    /** Uniform in [0, 1). */
    next(): number {
        this.state = (this.state + 0x6d2b79f5) >>> 0;
        let t = this.state;
        t = Math.imul(t ^ (t >>> 15), t | 1);
        t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
        return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    }

    uniform(lo: number, hi: number): number {
        return lo + (hi - lo) * this.next();
    }

    int(n: number): number {
        return Math.floor(this.next() * n);
    }

    /** Standard normal via Box-Muller. */
    normal(mean = 0, sd = 1): number {
        let u = 0;
        while (u === 0) u = this.next();
        const v = this.next();
        return mean + sd * Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
    }

    fillNormal(arr: Float32Array, mean = 0, sd = 1): Float32Array {
        for (let i = 0; i < arr.length; i++) arr[i] = this.normal(mean, sd);
        return arr;
    }

    fillUniform(arr: Float32Array, lo: number, hi: number): Float32Array {
        for (let i = 0; i < arr.length; i++) arr[i] = this.uniform(lo, hi);
        return arr;
    }
}
