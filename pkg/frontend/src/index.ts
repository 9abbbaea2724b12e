export {
  CSV_COLUMNS,
  LEVEL_STATISTICS,
  parseStudyCsv,
  levelSeries,
  studyName,
  rateFit,
} from './csv.js';
export type { LevelRow, RateRow, StudyCsv, RateFit } from './csv.js';
export { fitLogLog } from './fit.js';
export type { LogLogFit } from './fit.js';
export { plotRates } from './rates.js';
export type { RatePlot, RatePlotOptions, SeriesPlot } from './rates.js';
export { parseVtk } from './vtk.js';
export type { VtkGrid } from './vtk.js';
export { TriangleField } from './field.js';
export type { Bounds } from './field.js';
export { seedGrid, traceAll, traceStreamline } from './streamlines.js';
export type { Streamline, StreamlineOptions } from './streamlines.js';
export {
  renderCavity,
  renderPressureHeatmap,
  renderStreamlinePlot,
  renderVelocityPlot,
} from './cavity.js';
export type { CavityPlots, CavityRenderOptions, VortexStats } from './cavity.js';
export { main } from './cli.js';
