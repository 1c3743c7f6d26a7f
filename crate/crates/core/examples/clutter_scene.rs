//! Seeded clutter scene and the rank-reduced inner clutter covariances.

use stap_slp::clutter::{generate_scene, scene_ccms};
use stap_slp::experiments::preset;

fn main() -> stap_slp::Result<()> {
    let c = preset("desk")?;
    let scene = generate_scene(
        &c.array,
        c.clutter.half_width_cells,
        c.clutter.patches_per_cell,
        stap_slp::db_to_linear(c.clutter.power_db),
        c.clutter.azimuth_mode,
        c.clutter.doppler_model,
        c.seeds.scene,
    )?;
    for cell in &scene.cells {
        let p = &cell.patches[cell.patches.len() / 2];
        println!(
            "cell {:+}: {} patches, middle patch at {:.1} deg, Doppler {:.3}",
            cell.index,
            cell.patches.len(),
            p.azimuth_rad.to_degrees(),
            p.normalized_doppler
        );
    }
    for m in scene_ccms(&c.array, &scene, c.clutter.rank_threshold)? {
        println!("cell {:+}: rank {} of {}", m.cell_index, m.rank_factors.len(), m.matrix.nrows());
    }
    Ok(())
}
