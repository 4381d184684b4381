//! Renders one corpus image under every corruption at severities 1–5 as a
//! single PNG grid (rows: kinds, columns: clean then s1..s5).
//!
//! `cargo run --release -p corruptbench-core --example contact_sheet -- out.png [image-index]`

use corruptbench_core::corpus::synthetic_image_sized;
use corruptbench_core::corruptions::{apply_corruption, CorruptionKind, CorruptionSpec};
use corruptbench_core::imaging::{save_image, ImageBuffer, ImageFormat};
use corruptbench_core::schedule::Schedule;

const SIDE: usize = 112;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "contact_sheet.png".into());
    let index: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let img = synthetic_image_sized(index, SIDE, SIDE);
    let schedule = Schedule::default();
    let kinds = CorruptionKind::ALL;
    let mut sheet = ImageBuffer::filled(SIDE * 6, SIDE * kinds.len(), [1.0; 3]);
    for (row, kind) in kinds.into_iter().enumerate() {
        for col in 0..6 {
            let tile = if col == 0 {
                img.clone()
            } else {
                apply_corruption(&img, &CorruptionSpec::new(kind, col as u8, index as u64)?, &schedule)?
            };
            for y in 0..SIDE {
                for x in 0..SIDE {
                    sheet.set_pixel(col * SIDE + x, row * SIDE + y, tile.pixel(x, y));
                }
            }
        }
    }
    save_image(&sheet, &out, ImageFormat::Png)?;
    println!("wrote {out}");
    Ok(())
}
