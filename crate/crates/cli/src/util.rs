//! Flag parsing helpers.

use std::collections::HashMap;

use anyhow::{bail, Context, Result};

use weakcurv::degree::DomainU;
use weakcurv::fields::Rect;
use weakcurv::{Grid2D, TestFunction};

pub fn parse_grid(s: &str) -> Result<Grid2D> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        bail!("--grid wants nx,ny,x0,y0,h");
    }
    let nx: usize = parts[0].parse().context("grid nx")?;
    let ny: usize = parts[1].parse().context("grid ny")?;
    let x0: f64 = parts[2].parse().context("grid x0")?;
    let y0: f64 = parts[3].parse().context("grid y0")?;
    let h: f64 = parts[4].parse().context("grid h")?;
    Ok(Grid2D::new(nx, ny, x0, y0, h)?)
}

pub fn parse_domain(s: &str) -> Result<DomainU> {
    if let Some(rest) = s.strip_prefix("disk:") {
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("parsing disk domain")?;
        if nums.len() != 3 {
            bail!("disk domain wants disk:cx,cy,r");
        }
        return Ok(DomainU::disk([nums[0], nums[1]], nums[2]));
    }
    if let Some(rest) = s.strip_prefix("rect:") {
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("parsing rect domain")?;
        if nums.len() != 4 {
            bail!("rect domain wants rect:x0,x1,y0,y1");
        }
        return Ok(DomainU::rect(Rect::new(nums[0], nums[1], nums[2], nums[3])));
    }
    bail!("domain must start with disk: or rect:")
}

pub fn parse_phi(s: &str, unnormalized: bool) -> Result<TestFunction> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .context("parsing --phi")?;
    if nums.len() != 3 {
        bail!("--phi wants cx,cy,r");
    }
    Ok(if unnormalized {
        TestFunction::bump([nums[0], nums[1]], nums[2])
    } else {
        TestFunction::normalized([nums[0], nums[1]], nums[2])
    })
}

/// `e0,k` into a dyadic ladder; `None` leaves the suite default in place.
pub fn parse_eps(s: Option<&str>) -> Result<Option<Vec<f64>>> {
    let Some(s) = s else { return Ok(None) };
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("--eps wants e0,k");
    }
    let e0: f64 = parts[0].parse().context("eps start")?;
    let k: usize = parts[1].parse().context("eps rung count")?;
    if !(e0 > 0.0) || k < 4 {
        bail!("--eps needs e0 > 0 and at least 4 rungs");
    }
    Ok(Some(weakcurv::dyadic_ladder(e0, k)))
}

pub fn parse_tols(tols: &[String]) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for t in tols {
        let Some((name, value)) = t.split_once('=') else {
            bail!("--tol wants name=value, got {t:?}");
        };
        let v: f64 = value.trim().parse().with_context(|| format!("tolerance {name}"))?;
        map.insert(name.trim().to_string(), v);
    }
    Ok(map)
}
