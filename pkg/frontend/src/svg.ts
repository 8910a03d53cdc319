/**
 * Deterministic SVG assembly: fixed styles, fixed fonts, plain string
 * output. Rendering the same data twice must produce identical bytes, so
 * nothing here consults clocks, locales, or randomness.
 */

export interface Frame {
    width: number;
    height: number;
    margin: number;
    xMin: number;
    xMax: number;
    yMin: number;
    yMax: number;
}

export function fmt(v: number): string {
    if (!Number.isFinite(v)) return "0";
    const s = v.toPrecision(8);
    // trim trailing zeros for stable, compact output
    return s.includes(".") ? s.replace(/\.?0+$/, "").replace(/\.?0+e/, "e") : s;
}

export function frame(
    width: number,
    height: number,
    xs: number[],
    ys: number[],
    margin = 46,
): Frame {
    let xMin = Math.min(...xs);
    let xMax = Math.max(...xs);
    let yMin = Math.min(...ys);
    let yMax = Math.max(...ys);
    if (xMax === xMin) {
        xMin -= 1;
        xMax += 1;
    }
    if (yMax === yMin) {
        yMin -= 1;
        yMax += 1;
    }
    const padX = 0.04 * (xMax - xMin);
    const padY = 0.06 * (yMax - yMin);
    return {
        width,
        height,
        margin,
        xMin: xMin - padX,
        xMax: xMax + padX,
        yMin: yMin - padY,
        yMax: yMax + padY,
    };
}

export function sx(f: Frame, x: number): number {
    return f.margin + ((x - f.xMin) / (f.xMax - f.xMin)) * (f.width - 2 * f.margin);
}

export function sy(f: Frame, y: number): number {
    return f.height - f.margin - ((y - f.yMin) / (f.yMax - f.yMin)) * (f.height - 2 * f.margin);
}

export function polyline(f: Frame, xs: number[], ys: number[], stroke: string, width = 1.5): string {
    const pts = xs.map((x, i) => `${fmt(sx(f, x))},${fmt(sy(f, ys[i]))}`).join(" ");
    return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts}"/>`;
}

/** Closed band between (xs, upper) and reversed (xs, lower). */
export function band(f: Frame, xs: number[], lower: number[], upper: number[], fill: string): string {
    const fwd = xs.map((x, i) => `${fmt(sx(f, x))},${fmt(sy(f, upper[i]))}`);
    const back = xs
        .map((x, i) => `${fmt(sx(f, x))},${fmt(sy(f, lower[i]))}`)
        .reverse();
    return `<polygon fill="${fill}" fill-opacity="0.3" stroke="none" points="${fwd.concat(back).join(" ")}"/>`;
}

export function circles(f: Frame, xs: number[], ys: number[], r: number, fill: string): string {
    return xs
        .map(
            (x, i) =>
                `<circle cx="${fmt(sx(f, x))}" cy="${fmt(sy(f, ys[i]))}" r="${r}" fill="${fill}" fill-opacity="0.65"/>`,
        )
        .join("");
}

export function axes(f: Frame, xLabel: string, yLabel: string, title: string): string {
    const x0 = f.margin;
    const y0 = f.height - f.margin;
    const x1 = f.width - f.margin;
    const y1 = f.margin;
    const ticksOf = (a: number, b: number) => {
        const ticks: number[] = [];
        for (let i = 0; i <= 4; i++) ticks.push(a + ((b - a) * i) / 4);
        return ticks;
    };
    let out = `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black" stroke-width="1"/>`;
    out += `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black" stroke-width="1"/>`;
    for (const t of ticksOf(f.xMin, f.xMax)) {
        const px = sx(f, t);
        out += `<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 4}" stroke="black" stroke-width="1"/>`;
        out += `<text x="${fmt(px)}" y="${y0 + 16}" font-family="sans-serif" font-size="10" text-anchor="middle">${fmt(Number(t.toPrecision(3)))}</text>`;
    }
    for (const t of ticksOf(f.yMin, f.yMax)) {
        const py = sy(f, t);
        out += `<line x1="${x0 - 4}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="black" stroke-width="1"/>`;
        out += `<text x="${x0 - 7}" y="${fmt(py + 3)}" font-family="sans-serif" font-size="10" text-anchor="end">${fmt(Number(t.toPrecision(3)))}</text>`;
    }
    out += `<text x="${(x0 + x1) / 2}" y="${f.height - 8}" font-family="sans-serif" font-size="11" text-anchor="middle">${xLabel}</text>`;
    out += `<text x="12" y="${(y0 + y1) / 2}" font-family="sans-serif" font-size="11" text-anchor="middle" transform="rotate(-90 12 ${(y0 + y1) / 2})">${yLabel}</text>`;
    out += `<text x="${(x0 + x1) / 2}" y="${y1 - 8}" font-family="sans-serif" font-size="13" text-anchor="middle">${title}</text>`;
    return out;
}

export function document(width: number, height: number, body: string): string {
    return (
        `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}">` +
        `<rect width="${width}" height="${height}" fill="white"/>` +
        body +
        `</svg>\n`
    );
}
