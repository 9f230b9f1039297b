export {
  IndustrialBenchmarkClient,
  ServerError,
  OBSERVATION_ORDER,
  observationArray,
  type ActionTriple,
  type ClientOptions,
  type Observation,
  type ObservationName,
  type ResetOptions,
  type StepResult,
} from "./client.js";
