/** Trainer CLI: train | parity | export-init. */

import * as fs from "node:fs";
import * as path from "node:path";

import { SegNet } from "./model.js";
import { parityCheck, randomParams } from "./parity.js";
import { DEFAULT_SPEC, exportModel, train, writeLog } from "./train.js";
import { loadWbw1, saveWbw1 } from "./wbw1.js";

function parseFlags(argv: string[]): Map<string, string> {
    const flags = new Map<string, string>();
    for (let i = 0; i < argv.length; i++) {
        if (argv[i].startsWith("--")) {
            flags.set(argv[i].slice(2), argv[i + 1] ?? "");
            i++;
        }
    }
    return flags;
}

function listStudyDirs(cohortDir: string): string[] {
    const out: string[] = [];
    const walk = (dir: string) => {
        if (fs.existsSync(path.join(dir, "sidecar.json"))) {
            out.push(dir);
            return;
        }
        for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
            if (entry.isDirectory()) walk(path.join(dir, entry.name));
        }
    };
    walk(cohortDir);
    return out.sort();
}

async function cmdTrain(flags: Map<string, string>): Promise<number> {
    const cohort = flags.get("cohort");
    const out = flags.get("out");
    if (!cohort || !out) {
        console.error("usage: train --cohort <dir> --out model.wbw1 [--epochs N] "
            + "[--batch N] [--patch N] [--lr X] [--steps N] [--seed N] [--log path]");
        return 2;
    }
    const spec = {
        ...DEFAULT_SPEC,
        cohortDirs: listStudyDirs(cohort),
        epochs: Number(flags.get("epochs") ?? DEFAULT_SPEC.epochs),
        batchSize: Number(flags.get("batch") ?? DEFAULT_SPEC.batchSize),
        patchSize: Number(flags.get("patch") ?? DEFAULT_SPEC.patchSize),
        learningRate: Number(flags.get("lr") ?? DEFAULT_SPEC.learningRate),
        stepsPerEpoch: Number(flags.get("steps") ?? DEFAULT_SPEC.stepsPerEpoch),
        seed: Number(flags.get("seed") ?? 0),
        wbdwiBin: flags.get("wbdwi") ?? "wbdwi",
    };
    if (!spec.cohortDirs.length) {
        console.error(`no study dirs under ${cohort}`);
        return 2;
    }
    const { net, log } = await train(spec);
    exportModel(net, out);
    writeLog(log, flags.get("log") ?? out.replace(/\.wbw1$/, "") + "_log.json");
    const last = log.epochs.at(-1);
    console.log(`trained ${spec.epochs} epochs on ${spec.cohortDirs.length} studies; `
        + `final loss ${last ? last.loss.toFixed(4) : "n/a"}; exported ${out}`);
    return 0;
}

async function cmdParity(flags: Map<string, string>): Promise<number> {
    const weights = flags.get("weights");
    const out = flags.get("out");
    if (!weights || !out) {
        console.error("usage: parity --weights model.wbw1 --out report.json "
            + "[--fixtures N] [--seed N] [--size N] [--workdir dir]");
        return 2;
    }
    const report = parityCheck(
        SegNet.fromParams(loadWbw1(weights)),
        weights,
        flags.get("workdir") ?? fs.mkdtempSync("/tmp/wbdwi-parity-"),
        Number(flags.get("fixtures") ?? 10),
        Number(flags.get("seed") ?? 0),
        Number(flags.get("size") ?? 16),
        flags.get("wbdwi") ?? "wbdwi",
    );
    fs.writeFileSync(out, JSON.stringify(report, null, 2) + "\n");
    console.log(`parity max |diff| = ${report.maxAbsDiff.toExponential(3)} `
        + `(tolerance ${report.tolerance}) -> ${report.pass ? "PASS" : "FAIL"}`);
    return report.pass ? 0 : 1;
}

async function cmdExportInit(flags: Map<string, string>): Promise<number> {
    const out = flags.get("out");
    if (!out) {
        console.error("usage: export-init --out model.wbw1 [--seed N] [--random]");
        return 2;
    }
    const seed = Number(flags.get("seed") ?? 0);
    if (flags.has("random")) {
        saveWbw1(randomParams(seed), out);
    } else {
        exportModel(new SegNet(seed), out);
    }
    console.log(`exported initialization weights to ${out}`);
    return 0;
}

async function main(): Promise<number> {
    const [cmd, ...rest] = process.argv.slice(2);
    const flags = parseFlags(rest);
    switch (cmd) {
        case "train":
            return cmdTrain(flags);
        case "parity":
            return cmdParity(flags);
        case "export-init":
            return cmdExportInit(flags);
        default:
            console.error("commands: train | parity | export-init");
            return 2;
    }
}

main().then((code) => {
    process.exitCode = code;
});
