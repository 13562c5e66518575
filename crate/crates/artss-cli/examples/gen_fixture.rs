//! Regenerate the synthetic 12-image fixture under
//! `tests/fixtures/synthetic12/`: hand phantoms with joint annotations,
//! a manifest with reader scores, and per-image box files.
//!
//! ```text
//! cargo run -p artss-cli --example gen_fixture [-- <out_dir>]
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use artss_core::imageio::save_gray_png;

const SIZE: u32 = 256;

struct Finger {
    base: (f64, f64),
    tip: (f64, f64),
    width: f64,
}

struct Phantom {
    pixels: Vec<u8>,
    fingers: Vec<Finger>,
    palm: (f64, f64, f64, f64), // cx, cy, rx, ry
}

fn render(rng: &mut ChaCha8Rng) -> Phantom {
    let s = SIZE as f64;
    let palm_cx = s * rng.random_range(0.44..0.56);
    let palm_cy = s * rng.random_range(0.52..0.6);
    let palm_rx = s * rng.random_range(0.15..0.19);
    let palm_ry = s * rng.random_range(0.17..0.21);

    let mut fingers = Vec::new();
    for f in 0..5 {
        let angle = (-48.0 + 24.0 * f as f64 + rng.random_range(-4.0..4.0)).to_radians();
        let len = s * rng.random_range(0.2..0.28) * if f == 0 || f == 4 { 0.75 } else { 1.0 };
        let base = (
            palm_cx + palm_rx * 0.9 * angle.sin(),
            palm_cy - palm_ry * 0.8,
        );
        let tip = (base.0 + len * angle.sin(), base.1 - len * angle.cos());
        fingers.push(Finger {
            base,
            tip,
            width: s * rng.random_range(0.035..0.05),
        });
    }
    let wrist_w = s * 0.15;
    let wrist_top = palm_cy + palm_ry * 0.8;
    let wrist_bottom = (wrist_top + s * 0.18).min(s - 4.0);

    let mut pixels = vec![0u8; (SIZE * SIZE) as usize];
    for y in 0..SIZE {
        for x in 0..SIZE {
            let (px, py) = (x as f64, y as f64);
            let in_palm =
                ((px - palm_cx) / palm_rx).powi(2) + ((py - palm_cy) / palm_ry).powi(2) <= 1.0;
            let in_wrist =
                (px - palm_cx).abs() <= wrist_w / 2.0 && py >= wrist_top && py <= wrist_bottom;
            let in_finger = fingers.iter().any(|f| {
                let (dx, dy) = (f.tip.0 - f.base.0, f.tip.1 - f.base.1);
                let len2 = dx * dx + dy * dy;
                let t = (((px - f.base.0) * dx + (py - f.base.1) * dy) / len2).clamp(0.0, 1.0);
                let (qx, qy) = (f.base.0 + t * dx, f.base.1 + t * dy);
                (px - qx).powi(2) + (py - qy).powi(2) <= (f.width / 2.0).powi(2)
            });
            let base: f64 = if in_palm || in_wrist || in_finger { 205.0 } else { 38.0 };
            let noise: f64 = rng.random_range(-12.0..12.0);
            pixels[(y * SIZE + x) as usize] = (base + noise).clamp(0.0, 255.0) as u8;
        }
    }
    Phantom {
        pixels,
        fingers,
        palm: (palm_cx, palm_cy, palm_rx, palm_ry),
    }
}

/// Joint boxes from the phantom geometry: PIP near each fingertip, MCP at
/// each finger base, PI on the thumb's mid-segment, wrist at the palm
/// bottom. Classes use the frozen 0..=10 table.
fn annotation_lines(phantom: &Phantom, drop: usize, rng: &mut ChaCha8Rng) -> String {
    let s = SIZE as f64;
    let mut boxes: Vec<(usize, f64, f64, f64)> = Vec::new(); // (class, cx, cy, side_px)

    // Thumb interphalangeal: midpoint of finger 0.
    let thumb = &phantom.fingers[0];
    boxes.push((
        0,
        (thumb.base.0 + thumb.tip.0) / 2.0,
        (thumb.base.1 + thumb.tip.1) / 2.0,
        thumb.width * 1.8,
    ));
    // PIP_1..PIP_4 near fingertips of fingers 1..4.
    for (i, f) in phantom.fingers.iter().enumerate().skip(1) {
        boxes.push((
            i, // classes 1..=4
            f.base.0 * 0.3 + f.tip.0 * 0.7,
            f.base.1 * 0.3 + f.tip.1 * 0.7,
            f.width * 1.8,
        ));
    }
    // MCP_0..MCP_4 at finger bases.
    for (i, f) in phantom.fingers.iter().enumerate() {
        boxes.push((5 + i, f.base.0, f.base.1, f.width * 2.0));
    }
    // Wrist at the palm bottom.
    let (pcx, pcy, _, pry) = phantom.palm;
    boxes.push((10, pcx, pcy + pry * 0.9, s * 0.12));

    // Simulate joint disappearance by dropping a few boxes.
    for _ in 0..drop {
        if boxes.len() > 1 {
            let idx = rng.random_range(0..boxes.len());
            boxes.remove(idx);
        }
    }

    let mut out = String::new();
    for (class, cx, cy, side) in boxes {
        let half = side / 2.0;
        let cx_n = (cx / s).clamp(half / s, 1.0 - half / s);
        let cy_n = (cy / s).clamp(half / s, 1.0 - half / s);
        let _ = writeln!(
            out,
            "{class} {:.6} {:.6} {:.6} {:.6}",
            cx_n,
            cy_n,
            side / s,
            side / s
        );
    }
    out
}

fn main() {
    let out_root: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic12")
        });
    let images_dir = out_root.join("images");
    let annot_dir = out_root.join("annotations");
    std::fs::create_dir_all(&images_dir).unwrap();
    std::fs::create_dir_all(&annot_dir).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut manifest = String::from("id,path,age,gender,side,reader_a,reader_b\n");
    for i in 1..=12u32 {
        let id = format!("img{i:02}");
        let phantom = render(&mut rng);
        save_gray_png(&images_dir.join(format!("{id}.png")), &phantom.pixels, SIZE, SIZE)
            .unwrap();

        // A third of the images lose joints, as with deformed hands.
        let drop = match i % 3 {
            0 => rng.random_range(1..4),
            _ => 0,
        };
        let lines = annotation_lines(&phantom, drop, &mut rng);
        std::fs::write(annot_dir.join(format!("{id}.txt")), lines).unwrap();

        let age = rng.random_range(28..78);
        let gender = if rng.random_bool(0.8) { "female" } else { "male" };
        let reader_a: i64 = rng.random_range(0..40);
        let reader_b: i64 = (reader_a + rng.random_range(-3..4)).max(0);
        let _ = writeln!(
            manifest,
            "{id},images/{id}.png,{age},{gender},left,{reader_a},{reader_b}"
        );
    }
    std::fs::write(out_root.join("manifest.csv"), manifest).unwrap();
    println!("fixture written to {}", out_root.display());
}
