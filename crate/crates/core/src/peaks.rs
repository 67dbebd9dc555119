//! Local extrema with topographic prominence and 3-point parabolic
//! refinement.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// Sample index of the strict local extremum.
    pub index: usize,
    /// Refined abscissa.
    pub x: f64,
    /// Refined ordinate.
    pub y: f64,
    pub prominence: f64,
}

/// Strict local maxima of `y(x)` whose prominence is at least
/// `min_prominence`, in ascending `x` order. `x` must be strictly
/// increasing and the same length as `y`.
pub fn find_maxima(x: &[f64], y: &[f64], min_prominence: f64) -> Vec<Extremum> {
    assert_eq!(x.len(), y.len(), "abscissa and ordinate lengths differ");
    let n = y.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] > y[i + 1]) {
            continue;
        }
        let prominence = prominence_of(y, i);
        if prominence < min_prominence {
            continue;
        }
        let (xr, yr) = parabolic_vertex(
            (x[i - 1], y[i - 1]),
            (x[i], y[i]),
            (x[i + 1], y[i + 1]),
        );
        out.push(Extremum {
            index: i,
            x: xr,
            y: yr,
            prominence,
        });
    }
    out
}

/// Strict local minima, prominence measured downward.
pub fn find_minima(x: &[f64], y: &[f64], min_prominence: f64) -> Vec<Extremum> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    find_maxima(x, &neg, min_prominence)
        .into_iter()
        .map(|e| Extremum { y: -e.y, ..e })
        .collect()
}

/// Height of the peak above the higher of its two bases, where each base is
/// the lowest point between the peak and the nearest higher sample (or the
/// array end) on that side.
fn prominence_of(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for &v in y[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Vertex of the parabola through three points, clamped to the bracket.
fn parabolic_vertex(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = a;
    let (x1, y1) = b;
    let (x2, y2) = c;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv == 0.0 || !curv.is_finite() {
        return b;
    }
    // y = y1 + d·(x − x1) + curv·(x − x1)² with d the slope at x1
    let slope = d01 + curv * (x1 - x0);
    let dx = (-slope / (2.0 * curv)).clamp(0.5 * (x0 - x1), 0.5 * (x2 - x1));
    (x1 + dx, y1 + slope * dx + curv * dx * dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_exact() {
        // y = 3 − (x − 0.3)²
        let f = |x: f64| 3.0 - (x - 0.3) * (x - 0.3);
        let (xv, yv) = parabolic_vertex((0.0, f(0.0)), (0.25, f(0.25)), (0.6, f(0.6)));
        assert!((xv - 0.3).abs() < 1e-12);
        assert!((yv - 3.0).abs() < 1e-12);
    }

    #[test]
    fn prominence_uses_higher_base() {
        let x: Vec<f64> = (0..7).map(f64::from).collect();
        let y = [0.0, 5.0, 1.0, 3.0, 2.0, 4.0, 0.0];
        let peaks = find_maxima(&x, &y, 0.0);
        let proms: Vec<f64> = peaks.iter().map(|p| p.prominence).collect();
        assert_eq!(peaks.iter().map(|p| p.index).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(proms, vec![5.0, 1.0, 3.0]);
        let peaks = find_maxima(&x, &y, 2.0);
        assert_eq!(peaks.len(), 2);
    }

    #[test]
    fn monotone_has_no_extrema() {
        let x: Vec<f64> = (0..50).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        assert!(find_maxima(&x, &y, 0.0).is_empty());
        assert!(find_minima(&x, &y, 0.0).is_empty());
    }

    #[test]
    fn minima_mirror_maxima() {
        let x: Vec<f64> = (0..9).map(f64::from).collect();
        let y = [5.0, 4.0, 1.0, 4.0, 5.0, 3.0, 2.5, 3.0, 5.0];
        let dips = find_minima(&x, &y, 1.0);
        assert_eq!(dips.iter().map(|d| d.index).collect::<Vec<_>>(), vec![2, 6]);
        assert!(dips[0].y <= 1.0);
    }
}
