/**
 * Figure driver: scan an input directory for the known CSV schemas, render
 * every figure whose inputs are present, and write SVGs to the output
 * directory. Missing inputs are skipped with a warning; a malformed file
 * is an error.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseCsv, Table } from "./csv.js";
import {
    landingFigure,
    learningCurveFigure,
    speedFigure,
    traceFigure,
    variabilityFigure,
} from "./figures.js";

export { SchemaError, parseCsv, column } from "./csv.js";
export { gaussianEllipse, covariance2d, symmetricEigenvalues, histogram } from "./stats.js";
export { landingFigure, learningCurveFigure, speedFigure, traceFigure, variabilityFigure };

function readTable(dir: string, name: string): Table | undefined {
    const file = path.join(dir, name);
    if (!fs.existsSync(file)) {
        return undefined;
    }
    return parseCsv(fs.readFileSync(file, "utf-8"));
}

export function makeFigures(inputDir: string, outputDir: string, warn: (msg: string) => void = console.warn): string[] {
    fs.mkdirSync(outputDir, { recursive: true });
    const written: string[] = [];
    const emit = (name: string, content: string) => {
        const file = path.join(outputDir, name);
        fs.writeFileSync(file, content);
        written.push(file);
    };

    const curve = readTable(inputDir, "learning_curve.csv");
    if (curve && curve.rows > 0) {
        emit("learning_curve.svg", learningCurveFigure(curve));
    } else {
        warn("skipping learning curve figure: no learning_curve.csv");
    }

    const landing = readTable(inputDir, "landing_points.csv");
    if (landing && landing.rows > 1) {
        emit("landing_precision.svg", landingFigure(landing).svg);
    } else {
        warn("skipping landing figure: need landing_points.csv with at least 2 rows");
    }

    const speedFiles = fs.existsSync(inputDir)
        ? fs
              .readdirSync(inputDir)
              .filter((f) => /^speeds.*\.csv$/.test(f))
              .sort()
        : [];
    const speedTables = speedFiles
        .map((f) => ({ label: f.replace(/\.csv$/, ""), table: parseCsv(fs.readFileSync(path.join(inputDir, f), "utf-8")) }))
        .filter(({ table }) => table.rows > 0);
    if (speedTables.length > 0) {
        emit("speed_histograms.svg", speedFigure(speedTables));
    } else {
        warn("skipping speed histogram figure: no speeds*.csv with data");
    }

    const variability = readTable(inputDir, "variability.csv");
    if (variability && variability.rows > 0) {
        emit("variability.svg", variabilityFigure(variability));
    } else {
        warn("skipping variability figure: no variability.csv");
    }

    const trace = readTable(inputDir, "replay.csv");
    if (trace && trace.rows > 0) {
        emit("episode_trace.svg", traceFigure(trace));
    } else {
        warn("skipping episode trace figure: no replay.csv");
    }

    return written;
}
