//! Generates one instance of every Small setting and prints its layout.
//!
//! cargo run --example generate_instances -- [seed]

use drpe::generator::{generate_with_info, GeneratorSetting, SettingName, Size};

fn main() -> drpe::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    println!(
        "{:<18} {:>4} {:>4} {:>6} {:>6} {:>7} {:>5} {:>8}",
        "instance", "n_d", "n_r", "side", "e_max", "delta", "depot", "attempts"
    );
    for name in SettingName::ALL {
        let setting = GeneratorSetting::new(name, Size::Small, seed);
        let (inst, info) = generate_with_info(&setting)?;
        println!(
            "{:<18} {:>4} {:>4} {:>6} {:>6} {:>7.3} {:>5} {:>8}",
            inst.name(),
            inst.n_d(),
            inst.n_r(),
            setting.l,
            inst.e_max(),
            inst.rover_speed(),
            info.depot,
            info.attempts
        );
    }
    let inst = drpe::generate(&GeneratorSetting::new(SettingName::Basis, Size::Small, seed))?;
    println!("\n{}", drpe::io::instance_to_json(&inst));
    Ok(())
}
