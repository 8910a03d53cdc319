/** Sample statistics used by the landing-precision figure. */

export interface Ellipse {
    cx: number;
    cy: number;
    /** semi-axis along the major eigenvector */
    rx: number;
    ry: number;
    /** rotation of the major axis, degrees counterclockwise */
    angleDeg: number;
}

export function mean(values: number[]): number {
    return values.reduce((a, b) => a + b, 0) / values.length;
}

/** Unbiased sample covariance of paired samples. */
export function covariance2d(xs: number[], ys: number[]): [number, number, number] {
    const n = xs.length;
    const mx = mean(xs);
    const my = mean(ys);
    let sxx = 0;
    let sxy = 0;
    let syy = 0;
    for (let i = 0; i < n; i++) {
        const dx = xs[i] - mx;
        const dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    const d = n > 1 ? n - 1 : 1;
    return [sxx / d, sxy / d, syy / d];
}

/** Eigenvalues of a symmetric 2x2 [[a, b], [b, c]], descending. */
export function symmetricEigenvalues(a: number, b: number, c: number): [number, number] {
    const tr = a + c;
    const det = a * c - b * b;
    const disc = Math.sqrt(Math.max(0, (tr * tr) / 4 - det));
    return [tr / 2 + disc, tr / 2 - disc];
}

/**
 * k-sigma contour of the fitted Gaussian: semi-axes are k * sqrt of the
 * covariance eigenvalues, oriented along the leading eigenvector.
 */
export function gaussianEllipse(xs: number[], ys: number[], k: number): Ellipse {
    const [sxx, sxy, syy] = covariance2d(xs, ys);
    const [l1, l2] = symmetricEigenvalues(sxx, sxy, syy);
    let angle: number;
    if (sxy === 0) {
        angle = sxx >= syy ? 0 : 90;
    } else {
        angle = (Math.atan2(l1 - sxx, sxy) * 180) / Math.PI;
    }
    return {
        cx: mean(xs),
        cy: mean(ys),
        rx: k * Math.sqrt(Math.max(0, l1)),
        ry: k * Math.sqrt(Math.max(0, l2)),
        angleDeg: angle,
    };
}

export interface Histogram {
    edges: number[];
    probabilities: number[];
}

export function histogram(values: number[], binWidth: number): Histogram {
    const max = Math.max(...values);
    const nBins = Math.floor(max / binWidth) + 1;
    const counts = new Array<number>(nBins).fill(0);
    for (const v of values) {
        const idx = Math.min(nBins - 1, Math.max(0, Math.floor(v / binWidth)));
        counts[idx] += 1;
    }
    const edges = Array.from({ length: nBins + 1 }, (_, i) => i * binWidth);
    return { edges, probabilities: counts.map((c) => c / values.length) };
}
