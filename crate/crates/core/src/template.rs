//! Slide outline templates for technical and non-technical audiences.
//!
//! Both built-in templates share the same 17 subsections. The non-technical
//! variant moves the data-preparation subsections and the model alternatives
//! and details into two trailing appendix groups.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TEMPLATE_VERSION: &str = "nbdeck-outline/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("cannot parse template: {0}")]
    Parse(String),
    #[error("invalid template: {0}")]
    Invalid(String),
    #[error("template version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audience {
    Technical,
    Nontechnical,
}

impl std::str::FromStr for Audience {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "technical" => Ok(Audience::Technical),
            "nontechnical" | "non-technical" => Ok(Audience::Nontechnical),
            other => Err(format!("unknown audience {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionMode {
    /// Filled from matched code cells.
    Auto,
    /// Filled with an example/How-To for the presenter to replace.
    Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub id: String,
    pub title: String,
    pub parent_section: String,
    #[serde(default)]
    pub query: String,
    #[serde(default = "default_k")]
    pub k: usize,
    pub mode: SectionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_body: Option<String>,
}

fn default_k() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlineTemplate {
    pub version: String,
    pub audience: Audience,
    pub sections: Vec<SectionSpec>,
}

impl OutlineTemplate {
    pub fn auto_sections(&self) -> impl Iterator<Item = &SectionSpec> {
        self.sections.iter().filter(|s| s.mode == SectionMode::Auto)
    }

    pub fn section(&self, id: &str) -> Option<&SectionSpec> {
        self.sections.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.version != TEMPLATE_VERSION {
            return Err(TemplateError::VersionMismatch {
                found: self.version.clone(),
                expected: TEMPLATE_VERSION.into(),
            });
        }
        if self.sections.is_empty() {
            return Err(TemplateError::Invalid("template has no sections".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.sections {
            if s.id.trim().is_empty() {
                return Err(TemplateError::Invalid("section with empty id".into()));
            }
            if s.id == crate::deck::TITLE_SLIDE_ID || s.id.starts_with("user-") {
                return Err(TemplateError::Invalid(format!(
                    "section id {:?} is reserved",
                    s.id
                )));
            }
            if !seen.insert(s.id.as_str()) {
                return Err(TemplateError::Invalid(format!(
                    "duplicate section id {:?}",
                    s.id
                )));
            }
            if s.k == 0 {
                return Err(TemplateError::Invalid(format!(
                    "section {:?} has k = 0",
                    s.id
                )));
            }
            match s.mode {
                SectionMode::Auto if s.query.trim().is_empty() => {
                    return Err(TemplateError::Invalid(format!(
                        "auto section {:?} has no query",
                        s.id
                    )))
                }
                SectionMode::Prompt
                    if s.prompt_body.as_deref().is_none_or(|b| b.trim().is_empty()) =>
                {
                    return Err(TemplateError::Invalid(format!(
                        "prompt section {:?} has no prompt_body",
                        s.id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Parse and validate a template override file (TOML).
pub fn parse_template(text: &str) -> Result<OutlineTemplate, TemplateError> {
    let template: OutlineTemplate =
        toml::from_str(text).map_err(|e| TemplateError::Parse(e.to_string()))?;
    template.validate()?;
    Ok(template)
}

pub fn template_to_toml(template: &OutlineTemplate) -> String {
    toml::to_string(template).expect("templates always serialize")
}

struct Seed {
    id: &'static str,
    title: &'static str,
    k: usize,
    body: Body,
}

enum Body {
    Query(&'static str),
    Prompt(&'static str),
}

const fn auto(id: &'static str, title: &'static str, k: usize, query: &'static str) -> Seed {
    Seed {
        id,
        title,
        k,
        body: Body::Query(query),
    }
}

const fn prompt(id: &'static str, title: &'static str, body: &'static str) -> Seed {
    Seed {
        id,
        title,
        k: 3,
        body: Body::Prompt(body),
    }
}

const PURPOSE: Seed = prompt(
    "purpose",
    "Purpose and Intended use",
    "How-To: state the problem the model solves, who asked for it and who will use its output\n\
     Example: predicts the quality score of red wine from lab measurements to support the tasting panel\n\
     Example: intended for internal quality control, not for consumer-facing ratings",
);
const WORKFLOW: Seed = prompt(
    "workflow",
    "Workflow",
    "How-To: list the stages of the project in the order they were carried out\n\
     Example: data collection, cleaning, feature engineering, model training, evaluation",
);
const DATA_SOURCE: Seed = auto(
    "data-source",
    "Data Source",
    1,
    "Data source. Load the dataset. Read the raw data file with read_csv, read_excel, read_json or load_dataset. Download and import the data.",
);
const EDA: Seed = auto(
    "eda",
    "Exploratory Data Analysis",
    3,
    "Exploratory data analysis. Describe summary statistics with describe, info, shape and value_counts. \
     Plot the distribution of a variable with a histogram, boxplot, countplot, barplot, scatter or pairplot. \
     Visualize the correlation matrix with a heatmap.",
);
const DATA_CLEANING: Seed = auto(
    "data-cleaning",
    "Data Cleaning",
    3,
    "Data cleaning. Handle missing values with isnull, isna, fillna and dropna. \
     Remove duplicates with drop_duplicates and remove outliers. Drop columns, rename columns and fix data types with astype. \
     Data preprocessing.",
);
const FEATURE_ENGINEERING: Seed = auto(
    "feature-engineering",
    "Feature Engineering",
    3,
    "Feature engineering. Create new features and transform variables. \
     Encode categorical features with get_dummies, LabelEncoder or OneHotEncoder. \
     Scale and normalize features with StandardScaler or MinMaxScaler. Select features and reduce dimensions with PCA. Bin a variable into categories.",
);
const MODEL_INPUT: Seed = auto(
    "model-input",
    "Model Input",
    3,
    "Model input. Split the data into features X and target y. Create the training set and test set with train_test_split.",
);
const MODEL_OUTPUT: Seed = auto(
    "model-output",
    "Model Output",
    3,
    "Model output. Fit the model and predict the target. Make predictions on the test set with fit and predict.",
);
const OPTIMIZATION_GOAL: Seed = auto(
    "optimization-goal",
    "Optimization Goal",
    3,
    "Optimization goal. Compute the cross validation score of models with cross_val_score and KFold. \
     Tune hyperparameters with GridSearchCV or RandomizedSearchCV to minimize the loss or maximize the score.",
);
const MODEL_ALTERNATIVES: Seed = prompt(
    "model-alternatives",
    "Model Alternatives",
    "How-To: list the other models you tried and why they were not selected\n\
     Example: logistic regression and an SVM were compared; the random forest had the best cross-validated F1",
);
const MODEL_DETAILS: Seed = auto(
    "model-details",
    "Model Details",
    3,
    "Model details. Build and train a classifier or regressor such as RandomForestClassifier, LogisticRegression, \
     DecisionTreeClassifier, GradientBoostingClassifier, XGBClassifier, SVC, KNeighborsClassifier or LinearRegression. \
     Define the neural network layers and model parameters.",
);
const METRICS: Seed = auto(
    "metrics",
    "Metrics",
    3,
    "Metrics. Compute the accuracy, precision, recall and F1 score of a model. \
     Evaluate with accuracy_score, f1_score, classification_report, confusion_matrix, mean_squared_error, mean_absolute_error, r2_score and roc_auc_score.",
);
const PERFORMANCE: Seed = auto(
    "performance",
    "Performance",
    3,
    "Model performance. Compare the performance and results of the models. Plot the confusion matrix and the ROC curve. Show the scores of each model.",
);
const MODEL_INTERPRETATION: Seed = prompt(
    "model-interpretation",
    "Model Interpretation",
    "How-To: explain which inputs drive the predictions and in which direction\n\
     Example: alcohol and volatile acidity have the largest influence on predicted quality",
);
const SUGGESTIONS: Seed = prompt(
    "suggestions",
    "Suggestions",
    "How-To: recommend concrete actions for this audience based on the results\n\
     Example: monitor alcohol content in every production batch before tasting",
);
const ETHICAL: Seed = prompt(
    "ethical-legal",
    "Ethical & Legal considerations",
    "How-To: note privacy, consent, fairness and regulatory concerns raised by the data or the model\n\
     Example: the dataset holds no personal data; predictions must not replace certified tasters",
);
const LIMITATIONS: Seed = prompt(
    "limitation-risks",
    "Limitation & Risks",
    "How-To: describe where the model may fail and what happens if people rely on a wrong prediction\n\
     Example: trained on a single wine region, accuracy may drop on other varieties",
);

fn build(audience: Audience, groups: &[(&str, &[&Seed])]) -> OutlineTemplate {
    let mut sections = Vec::new();
    for (parent, seeds) in groups {
        for seed in *seeds {
            let (mode, query, prompt_body) = match seed.body {
                Body::Query(q) => (SectionMode::Auto, q.to_string(), None),
                Body::Prompt(p) => (SectionMode::Prompt, String::new(), Some(p.to_string())),
            };
            sections.push(SectionSpec {
                id: seed.id.into(),
                title: seed.title.into(),
                parent_section: parent.to_string(),
                query,
                k: seed.k,
                mode,
                prompt_body,
            });
        }
    }
    OutlineTemplate {
        version: TEMPLATE_VERSION.into(),
        audience,
        sections,
    }
}

/// The built-in outline for an audience.
pub fn template_for(audience: Audience) -> OutlineTemplate {
    match audience {
        Audience::Technical => build(
            audience,
            &[
                ("Introduction", &[&PURPOSE, &WORKFLOW]),
                (
                    "Data",
                    &[&DATA_SOURCE, &EDA, &DATA_CLEANING, &FEATURE_ENGINEERING],
                ),
                (
                    "Model",
                    &[
                        &MODEL_INPUT,
                        &MODEL_OUTPUT,
                        &OPTIMIZATION_GOAL,
                        &MODEL_ALTERNATIVES,
                        &MODEL_DETAILS,
                    ],
                ),
                (
                    "Model Performance",
                    &[&METRICS, &PERFORMANCE, &MODEL_INTERPRETATION],
                ),
                ("Conclusion", &[&SUGGESTIONS, &ETHICAL, &LIMITATIONS]),
            ],
        ),
        Audience::Nontechnical => build(
            audience,
            &[
                ("Introduction", &[&PURPOSE, &WORKFLOW, &DATA_SOURCE]),
                ("Model", &[&MODEL_INPUT, &MODEL_OUTPUT, &OPTIMIZATION_GOAL]),
                (
                    "Model Performance",
                    &[&METRICS, &PERFORMANCE, &MODEL_INTERPRETATION],
                ),
                ("Conclusion", &[&SUGGESTIONS, &ETHICAL, &LIMITATIONS]),
                (
                    "Appendix: Data",
                    &[&EDA, &DATA_CLEANING, &FEATURE_ENGINEERING],
                ),
                ("Appendix: Model", &[&MODEL_ALTERNATIVES, &MODEL_DETAILS]),
            ],
        ),
    }
}
