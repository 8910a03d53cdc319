#!/usr/bin/env node
import { makeFigures } from "./index.js";
import { SchemaError } from "./csv.js";

const [, , inputDir, outputDir] = process.argv;
if (!inputDir || !outputDir) {
    console.error("usage: pamtennis-figures <input_dir> <output_dir>");
    process.exit(1);
}
try {
    const written = makeFigures(inputDir, outputDir);
    for (const file of written) {
        console.log(file);
    }
} catch (err) {
    if (err instanceof SchemaError) {
        console.error(`schema error: ${err.message}`);
        process.exit(2);
    }
    throw err;
}
