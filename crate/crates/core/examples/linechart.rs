//! Render metric curves to a standalone SVG.

use clusterlens::chart::{render_linechart, ChartOptions, Series};

fn main() -> clusterlens::Result<()> {
    let ami = Series::new("AMI", (0..10).map(|i| (i as f64, 0.1 + 0.07 * i as f64)).collect());
    let purity = Series::new("purity", (0..10).map(|i| (i as f64, 0.4 + 0.05 * i as f64)).collect());
    let svg = render_linechart(
        &[ami, purity],
        &ChartOptions {
            title: "clusterability by layer".into(),
            ..ChartOptions::default()
        },
    )?;
    let path = std::env::temp_dir().join("clusterlens-linechart.svg");
    std::fs::write(&path, &svg).map_err(|e| clusterlens::Error::Io { path: path.clone(), source: e })?;
    println!("{} bytes -> {}", svg.len(), path.display());
    Ok(())
}
