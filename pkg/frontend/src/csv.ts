/** Minimal numeric CSV reader for the trainer/eval output schemas. */

export class SchemaError extends Error {}

export interface Table {
    columns: string[];
    /** column name -> values, all parsed as numbers */
    data: Map<string, number[]>;
    rows: number;
}

export function parseCsv(text: string): Table {
    const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
    if (lines.length === 0) {
        return { columns: [], data: new Map(), rows: 0 };
    }
    const columns = lines[0].split(",").map((c) => c.trim());
    const data = new Map<string, number[]>(columns.map((c) => [c, []]));
    for (let i = 1; i < lines.length; i++) {
        const parts = lines[i].split(",");
        if (parts.length !== columns.length) {
            throw new SchemaError(
                `row ${i + 1} has ${parts.length} fields, expected ${columns.length}`,
            );
        }
        for (let j = 0; j < columns.length; j++) {
            data.get(columns[j])!.push(Number(parts[j]));
        }
    }
    return { columns, data, rows: lines.length - 1 };
}

/** Fetch a required column or fail naming it. */
export function column(table: Table, name: string): number[] {
    const values = table.data.get(name);
    if (values === undefined) {
        throw new SchemaError(`missing column '${name}' (have: ${table.columns.join(", ")})`);
    }
    return values;
}
