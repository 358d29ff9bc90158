//! SVG rendering of the Dirichlet spectrum in the `(μ, ν)` plane.

use std::fmt::Write;

use crate::error::Result;
use crate::fucik::{curve_points, curves_in_window, region_check, Rect, Region};

const SIZE: f64 = 600.0;
const PAD: f64 = 50.0;
const SHADE_CELLS: usize = 150;
const CURVE_POINTS: usize = 800;

struct Frame {
    max: f64,
}

impl Frame {
    fn x(&self, mu: f64) -> f64 {
        PAD + mu / self.max * SIZE
    }

    fn y(&self, nu: f64) -> f64 {
        PAD + SIZE - nu / self.max * SIZE
    }
}

/// Render the curves visible in `[0, max]²` for horizon `T`, shade the
/// forbidden region and outline `rect` if given. Output depends only on the
/// inputs.
pub fn spectrum_svg(horizon: f64, max: f64, rect: Option<&Rect<f64>>) -> Result<String> {
    let fr = Frame { max };
    let total = SIZE + 2.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total:.0}" height="{total:.0}" viewBox="0 0 {total:.0} {total:.0}">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{PAD:.0}" y="{PAD:.0}" width="{SIZE:.0}" height="{SIZE:.0}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{total:.0}" height="{total:.0}" fill="white"/>"#
    );

    // forbidden region as merged runs of grid cells
    let cell = max / SHADE_CELLS as f64;
    let _ = writeln!(s, r##"<g fill="#d0d0d0" stroke="none">"##);
    for row in 0..SHADE_CELLS {
        let nu = (row as f64 + 0.5) * cell;
        let mut run: Option<usize> = None;
        for col in 0..=SHADE_CELLS {
            let forbidden = col < SHADE_CELLS && {
                let mu = (col as f64 + 0.5) * cell;
                region_check(mu, nu, horizon) == Region::Forbidden
            };
            match (forbidden, run) {
                (true, None) => run = Some(col),
                (false, Some(start)) => {
                    let x = fr.x(start as f64 * cell);
                    let w = fr.x(col as f64 * cell) - x;
                    let y = fr.y((row + 1) as f64 * cell);
                    let h = fr.y(row as f64 * cell) - y;
                    let _ = writeln!(s, r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}"/>"#);
                    run = None;
                }
                _ => {}
            }
        }
    }
    let _ = writeln!(s, "</g>");

    // axes and ticks
    let _ = writeln!(
        s,
        r#"<rect x="{PAD:.0}" y="{PAD:.0}" width="{SIZE:.0}" height="{SIZE:.0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="middle">{v}</text>"#,
            fr.x(v),
            PAD + SIZE + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">{v}</text>"#,
            PAD - 6.0,
            fr.y(v) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="14" text-anchor="middle">μ</text>"#,
        PAD + SIZE / 2.0,
        total - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.3}" font-size="14" text-anchor="middle">ν</text>"#,
        PAD + SIZE / 2.0
    );

    // spectrum curves
    let _ = writeln!(
        s,
        r#"<g clip-path="url(#plot)" fill="none" stroke="black" stroke-width="1.5">"#
    );
    for c in curves_in_window(horizon, max) {
        let pts = match curve_points(c, horizon, (0.0, max), CURVE_POINTS) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let mut path = String::new();
        for (mu, nu) in pts.into_iter().filter(|&(_, nu)| nu <= 2.0 * max) {
            let _ = write!(path, "{:.3},{:.3} ", fr.x(mu), fr.y(nu));
        }
        let _ = writeln!(
            s,
            r#"<polyline data-curve="C({},{})" points="{}"/>"#,
            c.a,
            c.b,
            path.trim_end()
        );
    }
    let _ = writeln!(s, "</g>");

    if let Some(r) = rect {
        let x = fr.x(r.mu1);
        let y = fr.y(r.nu2);
        let w = fr.x(r.mu2) - x;
        let h = fr.y(r.nu1) - y;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{h:.3}" fill="none" stroke="red" stroke-width="2" clip-path="url(#plot)"/>"#
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn deterministic_and_complete() {
        let r = Rect::new(1.0, 1.0, 4.0, 4.0).unwrap();
        let a = spectrum_svg(PI, 16.0, Some(&r)).unwrap();
        let b = spectrum_svg(PI, 16.0, Some(&r)).unwrap();
        assert_eq!(a, b);
        for c in ["C(0,1)", "C(1,0)", "C(1,1)", "C(1,2)", "C(2,1)", "C(2,2)"] {
            assert!(a.contains(c), "{c} missing");
        }
        assert!(!a.contains("C(2,3)"));
        assert!(a.contains(r#"stroke="red""#));
        assert!(a.contains(r##"fill="#d0d0d0""##));
    }
}
