//! Built-in presets, TOML round trip, and a config edited in code.

use stap_slp::experiments::{preset, preset_names, ScenarioConfig};

fn main() -> stap_slp::Result<()> {
    for name in preset_names() {
        let c = preset(name)?;
        println!(
            "{name}: Nt={} Nr={} M={} N={}, {} users, clutter cells {}",
            c.array.n_tx,
            c.array.n_rx,
            c.array.n_pulses,
            c.array.n_samples,
            c.comm.n_users,
            2 * c.clutter.half_width_cells + 1
        );
    }
    let mut c = preset("desk")?;
    c.comm.qos_db = vec![10.0];
    c.seeds.channel = 42;
    let text = c.to_toml()?;
    let back = ScenarioConfig::from_toml(&text)?;
    assert_eq!(back, c);
    println!("edited desk config round-trips through TOML ({} bytes)", text.len());

    match ScenarioConfig::from_toml("name = \"broken\"") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}
