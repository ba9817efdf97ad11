use super::catalog::ProductCatalog;
use super::forecast::ForecastState;
use super::StoreState;

pub const FEATURE_DIM: usize = 7;

pub type Features = [f64; FEATURE_DIM];

/// Per-product observation, in order: inventory, forecast demand, normalized
/// unit volume, normalized unit weight, normalized shelf life, forecast
/// volume load and forecast weight load of the whole store.
pub fn build_feature_vector(
    i: usize,
    state: &StoreState,
    forecast: &ForecastState,
    catalog: &ProductCatalog,
) -> Features {
    let load = system_load(forecast, catalog);
    product_features(i, state, forecast, catalog, load)
}

/// Features for every product, sharing the system-level aggregates.
pub fn build_features(
    state: &StoreState,
    forecast: &ForecastState,
    catalog: &ProductCatalog,
) -> Vec<Features> {
    let load = system_load(forecast, catalog);
    (0..catalog.len())
        .map(|i| product_features(i, state, forecast, catalog, load))
        .collect()
}

fn system_load(forecast: &ForecastState, catalog: &ProductCatalog) -> (f64, f64) {
    let (vol, wt) = catalog
        .products()
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(v, c), (i, p)| {
            let w = forecast.forecast(i);
            (v + p.volume * w, c + p.weight * w)
        });
    (vol / catalog.v_max(), wt / catalog.c_max())
}

fn product_features(
    i: usize,
    state: &StoreState,
    forecast: &ForecastState,
    catalog: &ProductCatalog,
    (vol_load, wt_load): (f64, f64),
) -> Features {
    let p = catalog.product(i);
    [
        state.inventory[i],
        forecast.forecast(i),
        p.volume / catalog.max_volume(),
        p.weight / catalog.max_weight(),
        (1.0 / p.spoilage_rate) / catalog.max_shelf_life(),
        vol_load,
        wt_load,
    ]
}
