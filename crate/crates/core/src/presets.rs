//! Initial states for the bundled EnvZ/OmpR network.

use crate::model::ReactionNetwork;

/// The state one reaction away from absorption: all OmpR phosphorylated,
/// one EnvZ in the ATP-bound form and the rest phosphorylated.
pub fn envz_one_away(net: &ReactionNetwork, x_tot: u32, y_tot: u32) -> Result<Vec<u32>, String> {
    if x_tot == 0 {
        return Err("X_tot must be at least 1".into());
    }
    let idx = |name: &str| {
        net.species_index(name)
            .ok_or_else(|| format!("network has no species {}", name))
    };
    let mut x = vec![0; net.m()];
    x[idx("Y_p")?] = y_tot;
    x[idx("X_p")?] = x_tot - 1;
    x[idx("XT")?] = 1;
    Ok(x)
}
