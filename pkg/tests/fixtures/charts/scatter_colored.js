// Scatter colored by a nominal column, with a categorical legend.
const margin = { top: 16, right: 110, bottom: 36, left: 48 };
const w = vw - margin.left - margin.right;
const h = vh - margin.top - margin.bottom;
const g = svg.append("g").attr("transform", `translate(${margin.left},${margin.top})`);

const groups = Array.from(new Set(data.map(d => d.group)));
const color = d3.scaleOrdinal().domain(groups).range(["#4e79a7", "#f28e2b", "#59a14f", "#e15759"]);

const xScale = d3.scaleLinear().domain(d3.extent(data, d => d.x)).nice().range([0, w]);
const yScale = d3.scaleLinear().domain(d3.extent(data, d => d.y)).nice().range([h, 0]);

g.append("g").attr("transform", `translate(0,${h})`).call(d3.axisBottom(xScale));
g.append("g").call(d3.axisLeft(yScale));

g.selectAll("circle")
  .data(data)
  .enter()
  .append("circle")
  .attr("cx", d => xScale(d.x))
  .attr("cy", d => yScale(d.y))
  .attr("r", 3.5)
  .attr("fill", d => color(d.group));

const legend = svg.append("g")
  .attr("transform", `translate(${vw - margin.right + 12},${margin.top})`);

legend.selectAll("circle")
  .data(groups)
  .enter()
  .append("circle")
  .attr("cy", (d, i) => i * 18)
  .attr("r", 5)
  .attr("fill", d => color(d));

legend.selectAll("text")
  .data(groups)
  .enter()
  .append("text")
  .attr("x", 10)
  .attr("y", (d, i) => i * 18 + 4)
  .text(d => d);

return [xScale, yScale];
